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

#ifndef MAXLIN_CERTIFY_HPP
#define MAXLIN_CERTIFY_HPP

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <exception>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "maxlin/engine.hpp"
#include "maxlin/model.hpp"
#include "maxlin/parallel.hpp"

namespace maxlin {

struct SearchOptions {
    /// First radius tried.
    double eps0 = 0.005;
    int iterations = 15;
};

/// Bracket of the radius search. Radii are in input units; inputs live in
/// [0, 1], so the ceiling starts at 1.
struct SearchState {
    double candidate = 0.0;
    double eps_min = 0.0;
    double eps_max = 1.0;
    int iteration = 0;
};

struct TraceEntry {
    double eps = 0.0;
    Verdict verdict = Verdict::Unknown;
    double margin = 0.0;
};

struct CertificationResult {
    /// Largest radius that passed verification (0 if none did).
    double certified_radius = 0.0;
    /// Next radius the search would have tried; never verified.
    double final_candidate = 0.0;
    double eps_max = 1.0;
    std::vector<TraceEntry> trace;
    double seconds = 0.0;
    PoolRule rule = PoolRule::MaxLin;
    Norm norm = Norm::Linf;
    bool correctly_classified = true;
    std::optional<std::string> error;
};

/// Doubling/bisection search for the largest certifiable radius.
///
/// `verify(eps)` returns a RobustnessVerdict (or anything with `verdict` and
/// `margin` members). Exactly `options.iterations` calls are made: on success
/// the floor rises to eps and the next try is min(2 eps, midpoint); on
/// failure the ceiling drops to eps and the next try is max(eps / 2, midpoint).
template <class Verify>
CertificationResult search_radius(Verify&& verify, const SearchOptions& options = {}) {
    SearchState s;
    s.candidate = options.eps0;
    CertificationResult out;
    out.trace.reserve(static_cast<std::size_t>(std::max(0, options.iterations)));
    for (; s.iteration < options.iterations; ++s.iteration) {
        const auto v = verify(s.candidate);
        out.trace.push_back({s.candidate, v.verdict, v.margin});
        if (v.verdict == Verdict::Certified) {
            s.eps_min = s.candidate;
            s.candidate = std::min(2.0 * s.candidate, (s.eps_max + s.eps_min) / 2.0);
        } else {
            s.eps_max = s.candidate;
            s.candidate = std::max(s.candidate / 2.0, (s.eps_max + s.eps_min) / 2.0);
        }
    }
    out.certified_radius = s.eps_min;
    out.final_candidate = s.candidate;
    out.eps_max = s.eps_max;
    return out;
}

/// Single analysis at the query's fixed radius.
inline RobustnessVerdict verify_at(const Network& net, const VerificationQuery& query, PoolRule rule,
                                   const AnalysisOptions& options = {}) {
    validate_query(net, query);
    if (!query.eps) throw DomainError("verify_at needs a fixed radius");
    const PerturbationSpec spec(query.x0, *query.eps, query.norm);
    return check_robust(analyze(net, spec, rule, options).output(), query.label);
}

inline CertificationResult binary_search(const Network& net, const VerificationQuery& query, PoolRule rule,
                                         const SearchOptions& search = {}, const AnalysisOptions& options = {}) {
    validate_query(net, query);
    const auto start = std::chrono::steady_clock::now();
    CertificationResult r = search_radius(
        [&](double eps) {
            const PerturbationSpec spec(query.x0, eps, query.norm);
            return check_robust(analyze(net, spec, rule, options).output(), query.label);
        },
        search);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    r.rule = rule;
    r.norm = query.norm;
    r.correctly_classified = net.predict(query.x0) == query.label;
    return r;
}

struct BatchAggregates {
    double mean_radius = 0.0;
    double mean_seconds = 0.0;
    /// Queries entering the means (correctly classified, no error).
    std::size_t counted = 0;
    std::size_t excluded = 0;
};

struct BatchResult {
    std::vector<CertificationResult> results;
    /// Absent when no query qualifies for the means.
    std::optional<BatchAggregates> aggregates;
};

/// Radius search over many queries, `workers` at a time. Misclassified
/// queries are kept (radius 0) but left out of the means; a query that throws
/// records its error and the batch carries on.
inline BatchResult batch_certify(const Network& net, const std::vector<VerificationQuery>& queries, PoolRule rule,
                                 std::size_t workers = 1, const SearchOptions& search = {},
                                 const AnalysisOptions& options = {}) {
    BatchResult out;
    out.results.resize(queries.size());
    parallel_for(queries.size(), workers, [&](std::size_t i) {
        try {
            out.results[i] = binary_search(net, queries[i], rule, search, options);
        } catch (const std::exception& e) {
            CertificationResult failed;
            failed.rule = rule;
            failed.norm = queries[i].norm;
            failed.correctly_classified = false;
            failed.error = e.what();
            out.results[i] = std::move(failed);
        }
    });

    BatchAggregates agg;
    for (const auto& r : out.results) {
        if (r.error || !r.correctly_classified) {
            ++agg.excluded;
            continue;
        }
        ++agg.counted;
        agg.mean_radius += r.certified_radius;
        agg.mean_seconds += r.seconds;
    }
    if (agg.counted > 0) {
        agg.mean_radius /= static_cast<double>(agg.counted);
        agg.mean_seconds /= static_cast<double>(agg.counted);
        out.aggregates = agg;
    }
    return out;
}

}  // namespace maxlin

#endif  // MAXLIN_CERTIFY_HPP
