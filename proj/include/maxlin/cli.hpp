/*
 * Copyright 2026 The maxlin Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef MAXLIN_CLI_HPP
#define MAXLIN_CLI_HPP

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "maxlin/certify.hpp"
#include "maxlin/model_io.hpp"
#include "maxlin/soundness.hpp"
#include "maxlin/volume_bench.hpp"

namespace maxlin::cli {

inline constexpr const char* kToolName = "maxlin";
inline constexpr const char* kToolVersion = "1.0.0";

enum class Format { Json, Csv };

inline std::string_view to_string(Format f) { return f == Format::Json ? "json" : "csv"; }

/// Exit codes shared by all subcommands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitNegative = 1;
inline constexpr int kExitError = 2;

struct RunConfig {
    std::string subcommand;
    std::string model_path;
    std::string inputs_path;
    Norm norm = Norm::Linf;
    PoolRule rule = PoolRule::MaxLin;
    std::optional<double> eps;
    bool search = false;
    double eps0 = 0.005;
    std::size_t workers = 1;
    std::uint64_t seed = 0;
    std::size_t samples = 10000;
    std::size_t trials = 50;
    std::string out_path;
    Format format = Format::Json;
    /// Test-only fault injection, see AnalysisOptions::unsafe_lower_slack.
    double unsafe_slack = 0.0;
};

inline Json config_json(const RunConfig& c) {
    Json j;
    j["subcommand"] = c.subcommand;
    j["model"] = c.model_path;
    j["inputs"] = c.inputs_path;
    j["norm"] = std::string(to_string(c.norm));
    j["maxpool_rule"] = std::string(to_string(c.rule));
    j["eps"] = c.eps ? Json(*c.eps) : Json(nullptr);
    j["search"] = c.search;
    j["eps0"] = c.eps0;
    j["workers"] = c.workers;
    j["seed"] = c.seed;
    j["samples"] = c.samples;
    j["trials"] = c.trials;
    j["format"] = std::string(to_string(c.format));
    j["unsafe_slack"] = c.unsafe_slack;
    return j;
}

/// Removes every "wall_time_s"-suffixed member (the only run-dependent fields)
/// and the worker count from a report, for determinism comparisons.
inline Json strip_timing(Json j) {
    if (j.is_object()) {
        Json out = Json::object();
        for (auto it = j.begin(); it != j.end(); ++it) {
            const std::string& key = it.key();
            if (key.size() >= 11 && key.compare(key.size() - 11, 11, "wall_time_s") == 0) continue;
            out[key] = strip_timing(it.value());
        }
        if (out.contains("config") && out["config"].is_object()) out["config"].erase("workers");
        return out;
    }
    if (j.is_array()) {
        Json out = Json::array();
        for (auto& v : j) out.push_back(strip_timing(v));
        return out;
    }
    return j;
}

namespace detail {

inline std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline Json verdict_json(std::size_t index, const VerificationQuery& q, const RobustnessVerdict& v, double seconds) {
    Json j;
    j["index"] = index;
    j["label"] = q.label;
    j["verdict"] = std::string(to_string(v.verdict));
    j["margin"] = v.margin;
    j["lower"] = maxlin::detail::vector_json(v.outputs.lower);
    j["upper"] = maxlin::detail::vector_json(v.outputs.upper);
    j["wall_time_s"] = seconds;
    return j;
}

inline Json certification_json(std::size_t index, const VerificationQuery& q, const CertificationResult& r) {
    Json j;
    j["index"] = index;
    j["label"] = q.label;
    j["correctly_classified"] = r.correctly_classified;
    j["certified_radius"] = r.certified_radius;
    j["final_candidate"] = r.final_candidate;
    j["eps_max"] = r.eps_max;
    j["rule"] = std::string(display_name(r.rule));
    j["norm"] = std::string(to_string(r.norm));
    Json trace = Json::array();
    for (const auto& t : r.trace) {
        trace.push_back({{"eps", t.eps}, {"verdict", std::string(to_string(t.verdict))}, {"margin", t.margin}});
    }
    j["trace"] = std::move(trace);
    j["wall_time_s"] = r.seconds;
    if (r.error) j["error"] = *r.error;
    return j;
}

inline bool write_output(const RunConfig& c, const std::string& data, std::ostream& err) {
    if (c.out_path.empty() || c.out_path == "-") {
        std::cout << data;
        std::cout.flush();
        return true;
    }
    std::ofstream f(c.out_path);
    if (!f) {
        err << kToolName << ": cannot write " << c.out_path << '\n';
        return false;
    }
    f << data;
    return static_cast<bool>(f);
}

inline Json report_skeleton(const RunConfig& c) {
    Json j;
    j["tool"] = kToolName;
    j["version"] = kToolVersion;
    j["config"] = config_json(c);
    return j;
}

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace detail

/// Fixed-radius verification of every query. Exit 0 if all are certified,
/// 1 if any is not, 2 on error.
inline int cmd_verify(const RunConfig& c, std::ostream& err = std::cerr) {
    const auto start = detail::Clock::now();
    try {
        if (!c.eps) throw DomainError("verify needs --eps");
        const Network net = load_model(c.model_path);
        auto queries = load_queries(c.inputs_path, c.norm);
        std::vector<RobustnessVerdict> verdicts(queries.size());
        std::vector<double> times(queries.size());
        const AnalysisOptions options{c.unsafe_slack};
        for (auto& q : queries) q.eps = *c.eps;
        for (const auto& q : queries) validate_query(net, q);
        parallel_for(queries.size(), c.workers, [&](std::size_t i) {
            const auto t0 = detail::Clock::now();
            verdicts[i] = verify_at(net, queries[i], c.rule, options);
            times[i] = detail::seconds_since(t0);
        });

        bool all = true;
        Json results = Json::array();
        std::string csv = "index,label,verdict,margin,wall_time_s\n";
        for (std::size_t i = 0; i < queries.size(); ++i) {
            all = all && verdicts[i].certified();
            err << "query " << i << ": " << to_string(verdicts[i].verdict) << " (margin "
                << detail::fmt_double(verdicts[i].margin) << ")\n";
            results.push_back(detail::verdict_json(i, queries[i], verdicts[i], times[i]));
            csv += std::to_string(i) + "," + std::to_string(queries[i].label) + "," +
                   std::string(to_string(verdicts[i].verdict)) + "," + detail::fmt_double(verdicts[i].margin) + "," +
                   detail::fmt_double(times[i]) + "\n";
        }
        Json report = detail::report_skeleton(c);
        report["results"] = std::move(results);
        report["aggregates"] = {{"queries", queries.size()},
                                {"certified", std::count_if(verdicts.begin(), verdicts.end(),
                                                            [](const auto& v) { return v.certified(); })}};
        report["wall_time_s"] = detail::seconds_since(start);
        if (!detail::write_output(c, c.format == Format::Json ? report.dump(2) + "\n" : csv, err)) return kExitError;
        return all ? kExitOk : kExitNegative;
    } catch (const std::exception& e) {
        err << kToolName << " verify: " << e.what() << '\n';
        return kExitError;
    }
}

/// Largest certified radius of every query. Exit 0 unless the run fails.
inline int cmd_search(const RunConfig& c, std::ostream& err = std::cerr) {
    const auto start = detail::Clock::now();
    try {
        const Network net = load_model(c.model_path);
        const auto queries = load_queries(c.inputs_path, c.norm);
        const SearchOptions search{c.eps0, 15};
        const BatchResult batch = batch_certify(net, queries, c.rule, c.workers, search, AnalysisOptions{c.unsafe_slack});

        Json results = Json::array();
        std::string csv = "index,label,correctly_classified,certified_radius,final_candidate,rule,norm,wall_time_s,error\n";
        for (std::size_t i = 0; i < queries.size(); ++i) {
            const auto& r = batch.results[i];
            if (r.error) {
                err << "query " << i << ": error: " << *r.error << '\n';
            } else {
                err << "query " << i << ": certified radius " << detail::fmt_double(r.certified_radius)
                    << (r.correctly_classified ? "" : " (misclassified, excluded from mean)") << '\n';
            }
            results.push_back(detail::certification_json(i, queries[i], r));
            csv += std::to_string(i) + "," + std::to_string(queries[i].label) + "," +
                   (r.correctly_classified ? "true" : "false") + "," + detail::fmt_double(r.certified_radius) + "," +
                   detail::fmt_double(r.final_candidate) + "," + std::string(display_name(r.rule)) + "," +
                   std::string(to_string(r.norm)) + "," + detail::fmt_double(r.seconds) + "," +
                   (r.error ? "\"" + *r.error + "\"" : "") + "\n";
        }
        Json report = detail::report_skeleton(c);
        report["results"] = std::move(results);
        if (batch.aggregates) {
            report["aggregates"] = {{"mean_certified_radius", batch.aggregates->mean_radius},
                                    {"mean_wall_time_s", batch.aggregates->mean_seconds},
                                    {"counted", batch.aggregates->counted},
                                    {"excluded", batch.aggregates->excluded}};
        } else {
            report["aggregates"] = nullptr;
        }
        report["wall_time_s"] = detail::seconds_since(start);
        if (!detail::write_output(c, c.format == Format::Json ? report.dump(2) + "\n" : csv, err)) return kExitError;
        return kExitOk;
    } catch (const std::exception& e) {
        err << kToolName << " search: " << e.what() << '\n';
        return kExitError;
    }
}

/// Mean Activation+MaxPool block volumes as CSV (or JSON with --format json).
inline int cmd_volume_bench(const RunConfig& c, std::ostream& err = std::cerr) {
    try {
        const auto reports = volume_benchmark(c.trials, c.seed);
        std::string data;
        if (c.format == Format::Csv) {
            data = volume_csv(reports);
        } else {
            Json report = detail::report_skeleton(c);
            Json rows = Json::array();
            for (const auto& r : reports) {
                rows.push_back({{"activation", std::string(to_string(r.activation))},
                                {"rule", std::string(display_name(r.rule))},
                                {"trials", r.trials},
                                {"mean_volume", r.mean_volume},
                                {"seed", r.seed}});
            }
            report["results"] = std::move(rows);
            data = report.dump(2) + "\n";
        }
        return detail::write_output(c, data, err) ? kExitOk : kExitError;
    } catch (const std::exception& e) {
        err << kToolName << " volume-bench: " << e.what() << '\n';
        return kExitError;
    }
}

/// Searches every query, then samples its ball at the certified radius.
/// Exit 0 iff no sample is misclassified.
inline int cmd_check_soundness(const RunConfig& c, std::ostream& err = std::cerr) {
    const auto start = detail::Clock::now();
    try {
        const Network net = load_model(c.model_path);
        const auto queries = load_queries(c.inputs_path, c.norm);
        const SoundnessSummary summary = check_soundness(net, queries, c.rule, c.samples, c.seed, c.workers,
                                                         SearchOptions{c.eps0, 15}, AnalysisOptions{c.unsafe_slack});
        Json results = Json::array();
        std::string csv = "index,label,certified_radius,samples,violations,error\n";
        for (std::size_t i = 0; i < queries.size(); ++i) {
            const auto& e = summary.entries[i];
            Json j;
            j["index"] = i;
            j["label"] = queries[i].label;
            j["certified_radius"] = e.certification.certified_radius;
            j["samples"] = e.falsification.samples;
            j["violations"] = e.falsification.violations;
            Json witnesses = Json::array();
            for (const auto& w : e.falsification.witnesses) witnesses.push_back(maxlin::detail::vector_json(w));
            j["witnesses"] = std::move(witnesses);
            j["wall_time_s"] = e.certification.seconds;
            if (e.error) j["error"] = *e.error;
            results.push_back(std::move(j));
            csv += std::to_string(i) + "," + std::to_string(queries[i].label) + "," +
                   detail::fmt_double(e.certification.certified_radius) + "," +
                   std::to_string(e.falsification.samples) + "," + std::to_string(e.falsification.violations) + "," +
                   (e.error ? "\"" + *e.error + "\"" : "") + "\n";
            if (e.error) {
                err << "query " << i << ": error: " << *e.error << '\n';
            } else {
                err << "query " << i << ": radius " << detail::fmt_double(e.certification.certified_radius) << ", "
                    << e.falsification.violations << " violations in " << e.falsification.samples << " samples\n";
            }
        }
        Json report = detail::report_skeleton(c);
        report["results"] = std::move(results);
        report["aggregates"] = {{"queries", queries.size()},
                                {"violations", summary.total_violations},
                                {"errors", summary.errors}};
        report["wall_time_s"] = detail::seconds_since(start);
        if (!detail::write_output(c, c.format == Format::Json ? report.dump(2) + "\n" : csv, err)) return kExitError;
        if (summary.errors > 0) return kExitError;
        return summary.total_violations == 0 ? kExitOk : kExitNegative;
    } catch (const std::exception& e) {
        err << kToolName << " check-soundness: " << e.what() << '\n';
        return kExitError;
    }
}

inline int run(const RunConfig& c, std::ostream& err = std::cerr) {
    if (c.subcommand == "verify") return cmd_verify(c, err);
    if (c.subcommand == "search") return cmd_search(c, err);
    if (c.subcommand == "volume-bench") return cmd_volume_bench(c, err);
    if (c.subcommand == "check-soundness") return cmd_check_soundness(c, err);
    err << kToolName << ": unknown subcommand '" << c.subcommand << "'\n";
    return kExitError;
}

}  // namespace maxlin::cli

#endif  // MAXLIN_CLI_HPP
