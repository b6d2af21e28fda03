#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "iag/backends/interfaces.hpp"
#include "iag/core/diagnostics.hpp"
#include "iag/hierfilter.hpp"

namespace iag {

using Vector = std::vector<double>;

struct ClusterResult {
    std::vector<std::size_t> assignments;  // one cluster index per input vector
    std::vector<Vector> centroids;         // K entries, in normalized space
    std::size_t iterations = 0;

    std::vector<std::size_t> cluster_sizes() const;
};

inline constexpr std::size_t kMaxKmeansIterations = 100;
inline constexpr std::size_t kKmeansRestarts = 10;

// Lloyd's algorithm with k-means++ seeding on L2-normalized copies of the
// inputs, refined by Hartigan point transfers and settled by a final Lloyd
// pass. Keeps the lowest-cost of kKmeansRestarts seeded runs (earliest on
// ties). Throws ParameterError for K == 0, K > n, ragged or zero vectors.
ClusterResult kmeans(const std::vector<Vector>& vectors, std::size_t k, std::uint64_t seed);

Vector l2_normalized(const Vector& v);
double squared_distance(const Vector& a, const Vector& b);

struct DiverseSelection {
    std::vector<ScoredSegment> selected;    // score desc, then input order
    std::optional<ClusterResult> clusters;  // absent when no clustering ran
    bool fell_back = false;                 // embedder failed; plain top-K used
};

DiverseSelection select_diverse(const std::vector<ScoredSegment>& scored, std::size_t k,
                                const EmbedderBackend& embedder, std::uint64_t seed, std::size_t workers = 1,
                                Diagnostics* diag = nullptr);

// Newline-joined segment texts. Throws EmptyContext on empty input.
std::string stitch(const std::vector<ScoredSegment>& selected);

}  // namespace iag
