#include <catch_amalgamated.hpp>

#include <random>

#include "iag/backends/mock.hpp"
#include "iag/core/errors.hpp"
#include "iag/diversity.hpp"

using namespace iag;

namespace {

// Embeds texts of the form "<cluster>:<anything>" near a fixed direction per
// cluster; throws for texts starting with '!'.
class PlantedEmbedder final : public EmbedderBackend {
public:
    std::vector<double> embed(const EmbedInput& input) const override {
        if (!input.value.empty() && input.value[0] == '!') throw Error("embed failed");
        std::vector<double> v(4, 0.0);
        int c = input.value[0] - '0';
        v[static_cast<std::size_t>(c % 4)] = 1.0;
        v[static_cast<std::size_t>((c + 1) % 4)] = 0.01 * static_cast<double>(input.value.size() % 5);
        return v;
    }
    std::size_t dimension() const override { return 4; }
};

ScoredSegment seg(const std::string& text, std::size_t index, int fifths) {
    ScoredSegment s;
    s.segment.site_url = "https://a.com";
    s.segment.index = index;
    s.segment.text = text;
    s.score = QuantizedScore::from_fifths(fifths);
    s.raw_letter = "FEDCBA"[fifths];
    return s;
}

double wcss(const std::vector<Vector>& pts, const std::vector<std::size_t>& assign, std::size_t k) {
    std::vector<Vector> mean(k, Vector(pts[0].size(), 0.0));
    std::vector<std::size_t> count(k, 0);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        ++count[assign[i]];
        for (std::size_t d = 0; d < pts[i].size(); ++d) mean[assign[i]][d] += pts[i][d];
    }
    for (std::size_t c = 0; c < k; ++c) {
        for (auto& x : mean[c]) x /= count[c] ? static_cast<double>(count[c]) : 1.0;
    }
    double total = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) total += squared_distance(pts[i], mean[assign[i]]);
    return total;
}

void check_fixed_point(const std::vector<Vector>& raw, const ClusterResult& r) {
    std::vector<Vector> pts;
    for (const auto& v : raw) pts.push_back(l2_normalized(v));
    const std::size_t k = r.centroids.size();
    for (std::size_t i = 0; i < pts.size(); ++i) {
        double own = squared_distance(pts[i], r.centroids[r.assignments[i]]);
        for (std::size_t c = 0; c < k; ++c) CHECK(own <= squared_distance(pts[i], r.centroids[c]) + 1e-9);
    }
    for (std::size_t c = 0; c < k; ++c) {
        Vector mean(pts[0].size(), 0.0);
        std::size_t n = 0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (r.assignments[i] != c) continue;
            ++n;
            for (std::size_t d = 0; d < mean.size(); ++d) mean[d] += pts[i][d];
        }
        REQUIRE(n > 0);
        for (std::size_t d = 0; d < mean.size(); ++d) CHECK(std::abs(mean[d] / static_cast<double>(n) - r.centroids[c][d]) < 1e-9);
    }
}

}  // namespace

TEST_CASE("kmeans degenerate K", "[diversity][kmeans]") {
    std::vector<Vector> pts{{1, 0}, {0, 1}, {1, 1}, {-1, 0.2}};
    auto all = kmeans(pts, 4, 0);
    std::set<std::size_t> distinct(all.assignments.begin(), all.assignments.end());
    CHECK(distinct.size() == 4);

    auto one = kmeans(pts, 1, 0);
    for (auto a : one.assignments) CHECK(a == 0);
    Vector mean(2, 0.0);
    for (const auto& p : pts) {
        auto n = l2_normalized(p);
        mean[0] += n[0] / 4;
        mean[1] += n[1] / 4;
    }
    CHECK(std::abs(one.centroids[0][0] - mean[0]) < 1e-12);
    CHECK(std::abs(one.centroids[0][1] - mean[1]) < 1e-12);
}

TEST_CASE("kmeans recovers two separated pairs", "[diversity][kmeans]") {
    std::vector<Vector> pts{{1, 0.05}, {0.05, 1}, {1, -0.05}, {-0.05, 1}};
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto r = kmeans(pts, 2, seed);
        CHECK(r.assignments[0] == r.assignments[2]);
        CHECK(r.assignments[1] == r.assignments[3]);
        CHECK(r.assignments[0] != r.assignments[1]);
        check_fixed_point(pts, r);
    }
}

TEST_CASE("kmeans input validation", "[diversity][kmeans]") {
    CHECK_THROWS_AS(kmeans({{1, 0}}, 2, 0), ParameterError);
    CHECK_THROWS_AS(kmeans({{1, 0}}, 0, 0), ParameterError);
    CHECK_THROWS_AS(kmeans({{1, 0}, {0, 0}}, 1, 0), ParameterError);
    CHECK_THROWS_AS(kmeans({{1, 0}, {1, 0, 0}}, 1, 0), ParameterError);
    CHECK_THROWS_AS(kmeans({}, 1, 0), ParameterError);
}

TEST_CASE("kmeans is deterministic and returns a fixed point", "[diversity][kmeans][property]") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 100; ++trial) {
        std::size_t n = 1 + rng() % 25;
        std::size_t k = 1 + rng() % n;
        std::vector<Vector> pts(n, Vector(3));
        for (auto& p : pts) {
            for (auto& x : p) x = g(rng);
            if (rng() % 5 == 0 && &p != &pts[0]) p = pts[0];
        }
        auto r = kmeans(pts, k, trial);
        CHECK(r.centroids.size() == k);
        CHECK(r.iterations <= kMaxKmeansIterations);
        CHECK(kmeans(pts, k, trial).assignments == r.assignments);
        auto sizes = r.cluster_sizes();
        CHECK(std::accumulate(sizes.begin(), sizes.end(), std::size_t{0}) == n);
        check_fixed_point(pts, r);
    }
}

TEST_CASE("kmeans beats most partitions on small inputs", "[diversity][kmeans][property]") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 60; ++trial) {
        std::size_t n = 2 + rng() % 6;
        std::size_t k = 1 + rng() % std::min<std::size_t>(3, n);
        std::vector<Vector> pts(n, Vector(2));
        for (auto& p : pts) {
            for (auto& x : p) x = g(rng);
        }
        std::vector<Vector> normed;
        for (const auto& p : pts) normed.push_back(l2_normalized(p));
        auto r = kmeans(pts, k, trial);
        double got = wcss(normed, r.assignments, k);

        // Every surjective assignment of n points onto k labels.
        std::size_t total = 0, worse_or_equal = 0;
        std::vector<std::size_t> a(n, 0);
        for (;;) {
            std::set<std::size_t> used(a.begin(), a.end());
            if (used.size() == k) {
                ++total;
                if (wcss(normed, a, k) >= got - 1e-12) ++worse_or_equal;
            }
            std::size_t i = 0;
            while (i < n && ++a[i] == k) a[i++] = 0;
            if (i == n) break;
        }
        CHECK(static_cast<double>(worse_or_equal) >= 0.95 * static_cast<double>(total));
    }
}

TEST_CASE("select_diverse", "[diversity][select]") {
    PlantedEmbedder emb;
    std::vector<ScoredSegment> same{seg("0:x", 0, 5), seg("0:x", 1, 4), seg("0:x", 2, 3)};
    auto r = select_diverse(same, 2, emb, 0);
    REQUIRE(r.selected.size() <= 2);
    CHECK(r.selected[0].segment.index == 0);

    std::vector<ScoredSegment> three{seg("0:a", 0, 1), seg("1:b", 1, 5), seg("2:c", 2, 3)};
    r = select_diverse(three, 3, emb, 0);
    REQUIRE(r.selected.size() == 3);
    CHECK_FALSE(r.clusters);
    for (std::size_t i = 0; i < 3; ++i) CHECK(r.selected[i].segment.index == i);

    std::vector<ScoredSegment> two_groups{seg("0:aa", 0, 5), seg("0:aaa", 1, 5), seg("0:a", 2, 4),
                                          seg("1:bb", 3, 2), seg("1:b", 4, 1), seg("1:bbbb", 5, 1)};
    for (std::uint64_t s = 0; s < 10; ++s) {
        r = select_diverse(two_groups, 2, emb, s);
        REQUIRE(r.selected.size() == 2);
        REQUIRE(r.clusters);
        CHECK(r.selected[0].segment.text[0] == '0');
        CHECK(r.selected[1].segment.text[0] == '1');
    }

    r = select_diverse(two_groups, 1, emb, 0);
    CHECK(r.selected.size() == 1);
}

TEST_CASE("select_diverse picks the member nearest each centroid", "[diversity][select][property]") {
    HashEmbedder emb(8, 3);
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<ScoredSegment> in;
        std::size_t n = 2 + rng() % 15;
        for (std::size_t i = 0; i < n; ++i) {
            in.push_back(seg("t" + std::to_string(rng() % 6), i, static_cast<int>(rng() % 6)));
        }
        std::size_t k = 1 + rng() % n;
        auto r = select_diverse(in, k, emb, trial, 1 + trial % 3);
        CHECK(r.selected.size() <= k);
        if (!r.clusters) {
            CHECK(r.selected.size() == n);
            continue;
        }
        std::vector<Vector> vs;
        for (const auto& s : in) vs.push_back(l2_normalized(emb.embed(EmbedInput::text(s.segment.text))));
        std::set<std::size_t> clusters_seen;
        for (const auto& s : r.selected) {
            std::size_t i = s.segment.index;
            std::size_t c = r.clusters->assignments[i];
            CHECK(clusters_seen.insert(c).second);
            double d = squared_distance(vs[i], r.clusters->centroids[c]);
            for (std::size_t j = 0; j < n; ++j) {
                if (r.clusters->assignments[j] != c) continue;
                double dj = squared_distance(vs[j], r.clusters->centroids[c]);
                CHECK(d <= dj + 1e-12);
                if (dj == d) CHECK(i <= j);
            }
        }
        for (std::size_t i = 1; i < r.selected.size(); ++i) CHECK(r.selected[i - 1].score >= r.selected[i].score);
    }
}

TEST_CASE("select_diverse falls back to top-K when embedding fails", "[diversity][select]") {
    PlantedEmbedder emb;
    std::vector<ScoredSegment> in{seg("0:a", 0, 1), seg("!bad", 1, 5), seg("1:c", 2, 3), seg("2:d", 3, 4)};
    Diagnostics diag;
    auto r = select_diverse(in, 2, emb, 0, 1, &diag);
    CHECK(r.fell_back);
    REQUIRE(r.selected.size() == 2);
    CHECK(r.selected[0].segment.index == 1);
    CHECK(r.selected[1].segment.index == 3);
    CHECK_FALSE(diag.empty());
}

TEST_CASE("stitch joins with newlines", "[diversity][stitch]") {
    CHECK(stitch({seg("a", 0, 1), seg("b", 1, 1)}) == "a\nb");
    CHECK(stitch({seg("only one", 0, 1)}) == "only one");
    CHECK_THROWS_AS(stitch({}), EmptyContext);
}
