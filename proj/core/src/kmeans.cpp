#include "fieldbabel/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>

#include <fmt/format.h>

#include "fieldbabel/error.hpp"

namespace fieldbabel {

namespace {

// All work happens on the in-mask values sorted ascending, so the result
// does not depend on where the pixels sit in the buffer.
struct Problem {
    std::vector<double> x;
    int k = 0;
};

struct Run {
    std::vector<int> labels;
    std::vector<double> centroids;
    double sse = 0.0;
    int iterations = 0;
    std::vector<double> trace;
};

std::vector<double> cluster_means(const Problem& p, const std::vector<int>& lab, const std::vector<double>& previous) {
    std::vector<double> sum(p.k, 0.0);
    std::vector<std::size_t> n(p.k, 0);
    for (std::size_t i = 0; i < p.x.size(); ++i) {
        sum[lab[i]] += p.x[i];
        ++n[lab[i]];
    }
    std::vector<double> c = previous;
    for (int j = 0; j < p.k; ++j) {
        if (n[j] > 0) c[j] = sum[j] / static_cast<double>(n[j]);
    }
    return c;
}

double partition_sse(const Problem& p, const std::vector<int>& lab) {
    const auto m = cluster_means(p, lab, std::vector<double>(p.k, 0.0));
    double s = 0.0;
    for (std::size_t i = 0; i < p.x.size(); ++i) {
        const double d = p.x[i] - m[lab[i]];
        s += d * d;
    }
    return s;
}

int nearest(double v, const std::vector<double>& c) {
    int best = 0;
    double best_d = (v - c[0]) * (v - c[0]);
    for (int j = 1; j < static_cast<int>(c.size()); ++j) {
        const double d = (v - c[j]) * (v - c[j]);
        if (d < best_d) {
            best_d = d;
            best = j;
        }
    }
    return best;
}

bool assign(const Problem& p, const std::vector<double>& c, std::vector<int>& lab) {
    bool changed = false;
    for (std::size_t i = 0; i < p.x.size(); ++i) {
        const int j = nearest(p.x[i], c);
        if (j != lab[i]) {
            lab[i] = j;
            changed = true;
        }
    }
    return changed;
}

// Keep label numbers in ascending centroid order throughout.
void sort_centroids(std::vector<double>& c, std::vector<int>& lab) {
    std::vector<int> order(c.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return c[a] < c[b]; });
    std::vector<int> rank(c.size());
    std::vector<double> sorted(c.size());
    for (std::size_t r = 0; r < order.size(); ++r) {
        rank[order[r]] = static_cast<int>(r);
        sorted[r] = c[order[r]];
    }
    c = std::move(sorted);
    for (auto& l : lab) {
        if (l >= 0) l = rank[l];
    }
}

void lloyd(const Problem& p, Run& run) {
    assign(p, run.centroids, run.labels);
    run.trace.push_back(partition_sse(p, run.labels));
    for (int it = 0; it < kMaxLloydIterations; ++it) {
        run.centroids = cluster_means(p, run.labels, run.centroids);
        sort_centroids(run.centroids, run.labels);
        const bool changed = assign(p, run.centroids, run.labels);
        ++run.iterations;
        run.trace.push_back(partition_sse(p, run.labels));
        if (!changed) break;
    }
}

struct Stats {
    std::vector<std::size_t> n;
    std::vector<double> mean;
};

Stats stats_of(const Problem& p, const std::vector<int>& lab) {
    Stats s{std::vector<std::size_t>(p.k, 0), cluster_means(p, lab, std::vector<double>(p.k, 0.0))};
    for (int l : lab) ++s.n[l];
    return s;
}

// Move point i to cluster j; if that empties its cluster, reseed the empty
// cluster with the point that fits its own cluster worst.
std::vector<int> transfer(const Problem& p, const std::vector<int>& lab, std::size_t i, int j) {
    std::vector<int> out = lab;
    const int from = out[i];
    out[i] = j;
    if (std::find(out.begin(), out.end(), from) == out.end()) {
        const auto m = cluster_means(p, out, std::vector<double>(p.k, 0.0));
        std::size_t worst = 0;
        double worst_err = -1.0;
        for (std::size_t q = 0; q < p.x.size(); ++q) {
            const double e = (p.x[q] - m[out[q]]) * (p.x[q] - m[out[q]]);
            if (e > worst_err) {
                worst_err = e;
                worst = q;
            }
        }
        out[worst] = from;
    }
    return out;
}

// Merge cluster b into a, then split the worst cluster at its best cut.
std::optional<std::vector<int>> merge_split(const Problem& p, const std::vector<int>& lab, int a, int b) {
    std::vector<int> out = lab;
    for (auto& l : out) {
        if (l == b) l = a;
    }
    const auto m = cluster_means(p, out, std::vector<double>(p.k, 0.0));
    std::vector<double> err(p.k, 0.0);
    std::vector<std::size_t> n(p.k, 0);
    for (std::size_t i = 0; i < p.x.size(); ++i) {
        err[out[i]] += (p.x[i] - m[out[i]]) * (p.x[i] - m[out[i]]);
        ++n[out[i]];
    }
    int w = -1;
    for (int q = 0; q < p.k; ++q) {
        if (n[q] > 1 && (w < 0 || err[q] > err[w])) w = q;
    }
    if (w < 0 || err[w] <= 0.0) return std::nullopt;

    std::vector<double> v;
    for (std::size_t i = 0; i < p.x.size(); ++i) {
        if (out[i] == w) v.push_back(p.x[i]);
    }
    // v is sorted because x is; scan all cuts with prefix sums.
    const std::size_t m_n = v.size();
    std::vector<double> pre(m_n + 1, 0.0), pre2(m_n + 1, 0.0);
    for (std::size_t i = 0; i < m_n; ++i) {
        pre[i + 1] = pre[i] + v[i];
        pre2[i + 1] = pre2[i] + v[i] * v[i];
    }
    double best = 0.0;
    std::size_t cut = 0;
    for (std::size_t c = 1; c < m_n; ++c) {
        const double nl = static_cast<double>(c);
        const double nr = static_cast<double>(m_n - c);
        const double sl = pre2[c] - pre[c] * pre[c] / nl;
        const double sr = (pre2[m_n] - pre2[c]) - (pre[m_n] - pre[c]) * (pre[m_n] - pre[c]) / nr;
        if (cut == 0 || sl + sr < best) {
            best = sl + sr;
            cut = c;
        }
    }
    const double threshold = 0.5 * (v[cut - 1] + v[cut]);
    for (std::size_t i = 0; i < p.x.size(); ++i) {
        if (out[i] == w && p.x[i] > threshold) out[i] = b;
    }
    return out;
}

std::optional<std::vector<int>> best_move(const Problem& p, const std::vector<int>& lab, double current) {
    const double tol = 1e-12 * (1.0 + current);
    const auto st = stats_of(p, lab);

    // Cheap O(1) deltas for moves that keep every cluster populated.
    double best_delta = -tol;
    std::size_t best_i = 0;
    int best_j = -1;
    std::optional<std::vector<int>> best_labels;
    double best_sse = current - tol;

    for (std::size_t i = 0; i < p.x.size(); ++i) {
        const int a = lab[i];
        const double xa = p.x[i] - st.mean[a];
        for (int j = 0; j < p.k; ++j) {
            if (j == a) continue;
            if (st.n[a] > 1) {
                const double na = static_cast<double>(st.n[a]);
                const double nj = static_cast<double>(st.n[j]);
                const double xj = p.x[i] - st.mean[j];
                const double delta = -na / (na - 1.0) * xa * xa + (st.n[j] == 0 ? 0.0 : nj / (nj + 1.0) * xj * xj);
                if (delta < best_delta) {
                    best_delta = delta;
                    best_i = i;
                    best_j = j;
                }
            } else {
                auto cand = transfer(p, lab, i, j);
                const double s = partition_sse(p, cand);
                if (s < best_sse) {
                    best_sse = s;
                    best_labels = std::move(cand);
                }
            }
        }
    }
    if (best_j >= 0) {
        auto cand = transfer(p, lab, best_i, best_j);
        const double s = partition_sse(p, cand);
        if (s < best_sse) {
            best_sse = s;
            best_labels = std::move(cand);
        }
    }
    for (int a = 0; a < p.k; ++a) {
        for (int b = a + 1; b < p.k; ++b) {
            auto cand = merge_split(p, lab, a, b);
            if (!cand) continue;
            const double s = partition_sse(p, *cand);
            if (s < best_sse) {
                best_sse = s;
                best_labels = std::move(cand);
            }
        }
    }
    return best_labels;
}

Run solve(const Problem& p, std::vector<double> init) {
    Run run;
    std::sort(init.begin(), init.end());
    run.centroids = std::move(init);
    run.labels.assign(p.x.size(), -1);
    lloyd(p, run);
    for (int round = 0; round < 10000; ++round) {
        const double current = partition_sse(p, run.labels);
        auto move = best_move(p, run.labels, current);
        if (!move) break;
        run.labels = std::move(*move);
        run.trace.push_back(partition_sse(p, run.labels));
        run.centroids = cluster_means(p, run.labels, run.centroids);
        sort_centroids(run.centroids, run.labels);
        lloyd(p, run);
    }
    run.centroids = cluster_means(p, run.labels, run.centroids);
    run.sse = partition_sse(p, run.labels);
    return run;
}

std::vector<double> quantile_init(const std::vector<double>& x, const std::vector<double>& distinct, int k) {
    std::vector<bool> used(distinct.size(), false);
    std::vector<double> c;
    const std::size_t n = x.size();
    for (int i = 0; i < k; ++i) {
        const double q = (i + 0.5) / k;
        const std::size_t idx = std::min(n - 1, static_cast<std::size_t>(std::floor(q * static_cast<double>(n))));
        const auto pos = static_cast<std::size_t>(std::lower_bound(distinct.begin(), distinct.end(), x[idx]) - distinct.begin());
        // Walk outwards in rank to the nearest unused distinct value.
        for (std::size_t d = 0; d < distinct.size(); ++d) {
            if (pos + d < distinct.size() && !used[pos + d]) {
                used[pos + d] = true;
                c.push_back(distinct[pos + d]);
                break;
            }
            if (d <= pos && !used[pos - d]) {
                used[pos - d] = true;
                c.push_back(distinct[pos - d]);
                break;
            }
        }
    }
    return c;
}

std::vector<double> random_init(const std::vector<double>& distinct, int k, std::mt19937_64& rng) {
    std::vector<std::size_t> idx(distinct.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<double> c;
    for (int i = 0; i < k; ++i) {
        std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(i), idx.size() - 1);
        std::swap(idx[static_cast<std::size_t>(i)], idx[pick(rng)]);
        c.push_back(distinct[idx[static_cast<std::size_t>(i)]]);
    }
    return c;
}

}  // namespace

ClusterResult kmeans_cluster(const Raster& raster, const Mask& mask, int k, std::uint64_t seed) {
    if (!(raster.geometry == mask.geometry)) {
        throw Error(ErrorCode::geometry_mismatch, "mask and raster are on different grids");
    }
    if (k < 1) throw Error(ErrorCode::invalid_argument, fmt::format("k must be positive, got {}", k));

    std::vector<std::size_t> pixels;
    for (std::size_t i = 0; i < raster.values.size(); ++i) {
        if (mask.bits[i] && !raster.is_nodata(raster.values[i])) pixels.push_back(i);
    }
    std::stable_sort(pixels.begin(), pixels.end(),
                     [&](std::size_t a, std::size_t b) { return raster.values[a] < raster.values[b]; });

    Problem p;
    p.k = k;
    for (auto i : pixels) p.x.push_back(raster.values[i]);
    std::vector<double> distinct = p.x;
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (static_cast<int>(distinct.size()) < k) {
        throw Error(ErrorCode::insufficient_distinct_values,
                    fmt::format("{} distinct in-mask values, k = {}", distinct.size(), k));
    }

    Run best = solve(p, quantile_init(p.x, distinct, k));
    std::mt19937_64 rng(seed);
    for (int r = 0; r < kRandomRestarts; ++r) {
        Run run = solve(p, random_init(distinct, k, rng));
        if (run.sse < best.sse) best = std::move(run);
    }

    ClusterResult out;
    out.labels = Raster(raster.geometry, kNodata, kNodata);
    for (std::size_t i = 0; i < pixels.size(); ++i) out.labels.values[pixels[i]] = static_cast<float>(best.labels[i]);
    out.centroids = std::move(best.centroids);
    out.sse = best.sse;
    out.iterations = best.iterations;
    out.sse_trace = std::move(best.trace);
    out.band = raster;
    for (std::size_t i = 0; i < out.band.values.size(); ++i) {
        if (!mask.bits[i]) out.band.values[i] = out.band.nodata;
    }
    return out;
}

std::vector<SamplePoint> sampling_plan(const ClusterResult& clusters, int n_per_cluster) {
    if (n_per_cluster < 1) throw Error(ErrorCode::invalid_argument, "n_per_cluster must be at least 1");
    const auto& g = clusters.labels.geometry;
    std::vector<SamplePoint> out;
    for (int label = 0; label < static_cast<int>(clusters.centroids.size()); ++label) {
        std::vector<std::pair<double, std::size_t>> ranked;
        for (std::size_t i = 0; i < clusters.labels.values.size(); ++i) {
            const float l = clusters.labels.values[i];
            if (clusters.labels.is_nodata(l) || static_cast<int>(l) != label) continue;
            ranked.emplace_back(std::abs(clusters.band.values[i] - clusters.centroids[label]), i);
        }
        const auto take = std::min<std::size_t>(ranked.size(), static_cast<std::size_t>(n_per_cluster));
        std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(take), ranked.end());
        for (std::size_t r = 0; r < take; ++r) {
            const std::size_t i = ranked[r].second;
            const int col = static_cast<int>(i % static_cast<std::size_t>(g.width));
            const int row = static_cast<int>(i / static_cast<std::size_t>(g.width));
            const auto c = g.pixel_center(col, row);
            out.push_back({label, col, row, c.x, c.y, clusters.band.values[i]});
        }
    }
    return out;
}

}  // namespace fieldbabel
