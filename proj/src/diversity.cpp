#include "iag/diversity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>

#include "iag/core/errors.hpp"
#include "iag/core/parallel.hpp"

namespace iag {

namespace {

constexpr double kMoveEpsilon = 1e-12;

std::size_t nearest_centroid(const Vector& p, const std::vector<Vector>& centroids) {
    std::size_t best = 0;
    double best_d = squared_distance(p, centroids[0]);
    for (std::size_t c = 1; c < centroids.size(); ++c) {
        double d = squared_distance(p, centroids[c]);
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

std::vector<Vector> seed_plus_plus(const std::vector<Vector>& pts, std::size_t k, std::mt19937_64& rng) {
    const std::size_t n = pts.size();
    std::vector<std::size_t> chosen;
    std::vector<bool> taken(n, false);
    std::uniform_int_distribution<std::size_t> first(0, n - 1);
    chosen.push_back(first(rng));
    taken[chosen.back()] = true;

    std::vector<double> d2(n);
    while (chosen.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = taken[i] ? 0.0 : squared_distance(pts[i], pts[chosen[0]]);
            for (std::size_t c = 1; c < chosen.size() && d2[i] > 0.0; ++c) {
                d2[i] = std::min(d2[i], squared_distance(pts[i], pts[chosen[c]]));
            }
            total += d2[i];
        }
        std::size_t next;
        if (total > 0.0) {
            std::discrete_distribution<std::size_t> pick(d2.begin(), d2.end());
            next = pick(rng);
        } else {
            std::vector<std::size_t> free;
            for (std::size_t i = 0; i < n; ++i) {
                if (!taken[i]) free.push_back(i);
            }
            std::uniform_int_distribution<std::size_t> pick(0, free.size() - 1);
            next = free[pick(rng)];
        }
        chosen.push_back(next);
        taken[next] = true;
    }

    std::vector<Vector> centroids;
    for (auto i : chosen) centroids.push_back(pts[i]);
    return centroids;
}

// Moves the point farthest from its centroid (lowest index on ties) out of a
// cluster with more than one member into each empty cluster.
bool repair_empty(const std::vector<Vector>& pts, std::vector<std::size_t>& assign, std::vector<Vector>& centroids) {
    const std::size_t k = centroids.size();
    bool repaired = false;
    for (std::size_t c = 0; c < k; ++c) {
        std::vector<std::size_t> sizes(k, 0);
        for (auto a : assign) ++sizes[a];
        if (sizes[c] > 0) continue;
        std::size_t victim = pts.size();
        double worst = -1.0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (sizes[assign[i]] < 2) continue;
            double d = squared_distance(pts[i], centroids[assign[i]]);
            if (d > worst) {
                worst = d;
                victim = i;
            }
        }
        assign[victim] = c;
        centroids[c] = pts[victim];
        repaired = true;
    }
    return repaired;
}

void update_means(const std::vector<Vector>& pts, const std::vector<std::size_t>& assign,
                  std::vector<Vector>& centroids) {
    const std::size_t dim = pts[0].size();
    std::vector<Vector> sums(centroids.size(), Vector(dim, 0.0));
    std::vector<std::size_t> counts(centroids.size(), 0);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        for (std::size_t d = 0; d < dim; ++d) sums[assign[i]][d] += pts[i][d];
        ++counts[assign[i]];
    }
    for (std::size_t c = 0; c < centroids.size(); ++c) {
        if (counts[c] == 0) continue;
        for (std::size_t d = 0; d < dim; ++d) sums[c][d] /= static_cast<double>(counts[c]);
        centroids[c] = std::move(sums[c]);
    }
}

void iterate(const std::vector<Vector>& pts, ClusterResult& r) {
    while (r.iterations < kMaxKmeansIterations) {
        ++r.iterations;
        bool changed = repair_empty(pts, r.assignments, r.centroids);
        update_means(pts, r.assignments, r.centroids);
        for (std::size_t i = 0; i < pts.size(); ++i) {
            std::size_t cur = r.assignments[i];
            std::size_t best = nearest_centroid(pts[i], r.centroids);
            if (best != cur && squared_distance(pts[i], r.centroids[best]) <
                                   squared_distance(pts[i], r.centroids[cur]) - kMoveEpsilon) {
                r.assignments[i] = best;
                changed = true;
            }
        }
        if (!changed) break;
    }
}

// Hartigan single-point transfers: move a point whenever doing so lowers the
// total cost once both means are updated. Escapes many Lloyd local optima.
bool hartigan(const std::vector<Vector>& pts, ClusterResult& r) {
    const std::size_t k = r.centroids.size();
    std::vector<std::size_t> sizes = r.cluster_sizes();
    bool moved_any = false;
    for (std::size_t pass = 0; pass < kMaxKmeansIterations; ++pass) {
        bool moved = false;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            std::size_t a = r.assignments[i];
            if (sizes[a] < 2) continue;
            double na = static_cast<double>(sizes[a]);
            double remove_gain = na / (na - 1.0) * squared_distance(pts[i], r.centroids[a]);
            std::size_t target = a;
            double best_delta = -kMoveEpsilon;
            for (std::size_t b = 0; b < k; ++b) {
                if (b == a) continue;
                double nb = static_cast<double>(sizes[b]);
                double delta = nb / (nb + 1.0) * squared_distance(pts[i], r.centroids[b]) - remove_gain;
                if (delta < best_delta) {
                    best_delta = delta;
                    target = b;
                }
            }
            if (target == a) continue;
            double nb = static_cast<double>(sizes[target]);
            for (std::size_t d = 0; d < pts[i].size(); ++d) {
                r.centroids[a][d] = (r.centroids[a][d] * na - pts[i][d]) / (na - 1.0);
                r.centroids[target][d] = (r.centroids[target][d] * nb + pts[i][d]) / (nb + 1.0);
            }
            --sizes[a];
            ++sizes[target];
            r.assignments[i] = target;
            moved = moved_any = true;
        }
        if (!moved) break;
    }
    return moved_any;
}

ClusterResult lloyd(const std::vector<Vector>& pts, std::size_t k, std::mt19937_64& rng) {
    ClusterResult r;
    r.centroids = seed_plus_plus(pts, k, rng);
    r.assignments.resize(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) r.assignments[i] = nearest_centroid(pts[i], r.centroids);
    iterate(pts, r);
    if (hartigan(pts, r)) iterate(pts, r);
    return r;
}

double within_cluster_ss(const std::vector<Vector>& pts, const ClusterResult& r) {
    double total = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) total += squared_distance(pts[i], r.centroids[r.assignments[i]]);
    return total;
}

}  // namespace

std::vector<std::size_t> ClusterResult::cluster_sizes() const {
    std::vector<std::size_t> sizes(centroids.size(), 0);
    for (auto a : assignments) ++sizes[a];
    return sizes;
}

double squared_distance(const Vector& a, const Vector& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

Vector l2_normalized(const Vector& v) {
    double norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
    if (v.empty() || !(norm > 0.0) || !std::isfinite(norm)) throw ParameterError("cannot normalize a zero-length vector");
    Vector out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / norm;
    return out;
}

ClusterResult kmeans(const std::vector<Vector>& vectors, std::size_t k, std::uint64_t seed) {
    if (k == 0) throw ParameterError("K must be at least 1");
    if (k > vectors.size()) {
        throw ParameterError("K=" + std::to_string(k) + " exceeds the number of vectors (" +
                             std::to_string(vectors.size()) + ")");
    }
    std::vector<Vector> pts;
    pts.reserve(vectors.size());
    for (const auto& v : vectors) {
        if (v.size() != vectors[0].size()) throw ParameterError("vectors have different dimensions");
        pts.push_back(l2_normalized(v));
    }

    std::mt19937_64 rng(seed);
    std::optional<ClusterResult> best;
    double best_cost = 0.0;
    for (std::size_t restart = 0; restart < kKmeansRestarts; ++restart) {
        ClusterResult r = lloyd(pts, k, rng);
        double cost = within_cluster_ss(pts, r);
        if (!best || cost < best_cost - kMoveEpsilon) {
            best = std::move(r);
            best_cost = cost;
        }
    }
    return std::move(*best);
}

DiverseSelection select_diverse(const std::vector<ScoredSegment>& scored, std::size_t k,
                                const EmbedderBackend& embedder, std::uint64_t seed, std::size_t workers,
                                Diagnostics* diag) {
    if (k == 0) throw ParameterError("K must be at least 1");
    DiverseSelection out;
    if (scored.size() <= k) {
        out.selected = scored;
        return out;
    }

    std::vector<Vector> embeddings;
    try {
        embeddings = parallel_map(scored.size(), workers, [&](std::size_t i) {
            return embedder.embed(EmbedInput::text(scored[i].segment.text));
        });
        out.clusters = kmeans(embeddings, k, seed);
    } catch (const std::exception& e) {
        flag(diag, "diversity", std::string("clustering unavailable, using top-K: ") + e.what());
        out.fell_back = true;
        out.selected = select_top_segments(scored, k);
        return out;
    }

    const ClusterResult& cr = *out.clusters;
    std::vector<std::size_t> reps;
    for (std::size_t c = 0; c < k; ++c) {
        std::size_t best = scored.size();
        double best_d = 0.0;
        for (std::size_t i = 0; i < scored.size(); ++i) {
            if (cr.assignments[i] != c) continue;
            double d = squared_distance(l2_normalized(embeddings[i]), cr.centroids[c]);
            if (best == scored.size() || d < best_d) {
                best = i;
                best_d = d;
            }
        }
        if (best < scored.size()) reps.push_back(best);
    }
    std::sort(reps.begin(), reps.end());
    for (auto i : reps) out.selected.push_back(scored[i]);
    std::stable_sort(out.selected.begin(), out.selected.end(),
                     [](const ScoredSegment& a, const ScoredSegment& b) { return a.score > b.score; });
    return out;
}

std::string stitch(const std::vector<ScoredSegment>& selected) {
    if (selected.empty()) throw EmptyContext("no segments to stitch");
    std::string x;
    for (std::size_t i = 0; i < selected.size(); ++i) {
        if (i) x += '\n';
        x += selected[i].segment.text;
    }
    return x;
}

}  // namespace iag
