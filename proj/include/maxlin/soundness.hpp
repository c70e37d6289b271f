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

#ifndef MAXLIN_SOUNDNESS_HPP
#define MAXLIN_SOUNDNESS_HPP

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <optional>
#include <string>
#include <vector>

#include "maxlin/certify.hpp"
#include "maxlin/oracle.hpp"
#include "maxlin/parallel.hpp"

namespace maxlin {

struct SoundnessEntry {
    CertificationResult certification;
    FalsificationReport falsification;
    std::optional<std::string> error;
};

struct SoundnessSummary {
    std::vector<SoundnessEntry> entries;
    std::size_t total_violations = 0;
    std::size_t errors = 0;

    bool sound() const noexcept { return total_violations == 0 && errors == 0; }
};

/// Certifies every query, then samples its ball at the certified radius.
/// Query i samples with seed + i. A query with nothing certified makes no
/// claim and is not sampled.
inline SoundnessSummary check_soundness(const Network& net, const std::vector<VerificationQuery>& queries,
                                        PoolRule rule, std::size_t samples, std::uint64_t seed,
                                        std::size_t workers = 1, const SearchOptions& search = {},
                                        const AnalysisOptions& options = {}) {
    SoundnessSummary out;
    out.entries.resize(queries.size());
    parallel_for(queries.size(), workers, [&](std::size_t i) {
        auto& e = out.entries[i];
        try {
            e.certification = binary_search(net, queries[i], rule, search, options);
            const bool claimed = std::any_of(e.certification.trace.begin(), e.certification.trace.end(),
                                             [](const TraceEntry& t) { return t.verdict == Verdict::Certified; });
            if (claimed) {
                e.falsification = falsify(net, queries[i], e.certification.certified_radius, samples, seed + i);
            } else {
                e.falsification.query = queries[i];
            }
        } catch (const std::exception& ex) {
            e.error = ex.what();
        }
    });
    for (const auto& e : out.entries) {
        out.total_violations += e.falsification.violations;
        if (e.error) ++out.errors;
    }
    return out;
}

}  // namespace maxlin

#endif  // MAXLIN_SOUNDNESS_HPP
