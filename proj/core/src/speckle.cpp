#include "fieldbabel/speckle.hpp"

#include <algorithm>
#include <cmath>
#include <thread>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <fmt/format.h>

#include "fieldbabel/error.hpp"

namespace fieldbabel {

namespace {

// Speckle CDF for Gamma(shape=L, scale=1/L): P(L, L·v).
double speckle_cdf(int looks, double v) { return boost::math::gamma_p(looks, looks * v); }
double speckle_sf(int looks, double v) { return boost::math::gamma_q(looks, looks * v); }
double speckle_pdf(int looks, double v) {
    return v <= 0.0 ? (looks == 1 ? 1.0 : 0.0) : looks * boost::math::gamma_p_derivative(looks, looks * v);
}

// Bisection on a monotone function g(v) = target over [0, ∞). `increasing`
// tells which way g goes.
template <typename F>
double solve_monotone(F g, double target, bool increasing) {
    double lo = 0.0;
    double hi = 1.0;
    auto past = [&](double v) { return increasing ? g(v) >= target : g(v) <= target; };
    while (!past(hi)) {
        hi *= 2.0;
        if (hi > 1e6) throw Error(ErrorCode::invalid_argument, "sigma range quantile does not converge");
    }
    for (int it = 0; it < 400 && hi - lo > 1e-16 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (past(mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace

SigmaRangeParams compute_sigma_range(int looks, double sigma) {
    if (looks < 1) throw Error(ErrorCode::invalid_argument, fmt::format("looks must be >= 1, got {}", looks));
    if (!(sigma > 0.0 && sigma < 1.0)) {
        throw Error(ErrorCode::invalid_argument, fmt::format("sigma must lie in (0,1), got {}", sigma));
    }
    const double tail = (1.0 - sigma) / 2.0;
    SigmaRangeParams p;
    p.looks = looks;
    p.sigma = sigma;
    p.a1 = solve_monotone([&](double v) { return speckle_cdf(looks, v); }, tail, true);
    // The upper quantile is solved on the survival function to keep precision
    // when the tail is tiny.
    p.a2 = solve_monotone([&](double v) { return speckle_sf(looks, v); }, tail, false);

    using boost::math::quadrature::gauss_kronrod;
    auto integrate = [&](auto f) {
        return gauss_kronrod<double, 61>::integrate(f, p.a1, p.a2, 15, 1e-14);
    };
    const double m0 = integrate([&](double v) { return speckle_pdf(looks, v); });
    const double m1 = integrate([&](double v) { return v * speckle_pdf(looks, v); }) / m0;
    const double m2 = integrate([&](double v) { return v * v * speckle_pdf(looks, v); }) / m0;
    p.sigma_vn = std::sqrt(std::max(0.0, m2 - m1 * m1)) / m1;
    return p;
}

void SpeckleFilterParams::validate() const {
    if (window < 1 || window % 2 == 0 || target_window < 1 || target_window % 2 == 0) {
        throw Error(ErrorCode::invalid_argument, "filter windows must be odd and positive");
    }
    if (target_window > window) throw Error(ErrorCode::invalid_argument, "target window exceeds filter window");
    if (!(point_target_percentile > 0.0 && point_target_percentile <= 1.0)) {
        throw Error(ErrorCode::invalid_argument, "point-target percentile must lie in (0,1]");
    }
    if (point_target_min_count < 1 || min_in_range < 1) {
        throw Error(ErrorCode::invalid_argument, "filter counts must be positive");
    }
}

float valid_quantile(const Raster& raster, double p) {
    std::vector<float> valid;
    valid.reserve(raster.values.size());
    for (float v : raster.values) {
        if (!raster.is_nodata(v)) valid.push_back(v);
    }
    if (valid.empty()) return raster.nodata;
    auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(valid.size())));
    rank = std::clamp<std::size_t>(rank, 1, valid.size()) - 1;
    std::nth_element(valid.begin(), valid.begin() + static_cast<std::ptrdiff_t>(rank), valid.end());
    return valid[rank];
}

namespace {

struct Moments {
    double mean = 0.0;
    double var = 0.0;
    int n = 0;
};

double mmse(double y, const Moments& m, double speckle_sd) {
    if (m.var == 0.0) return m.mean;
    const double s2 = speckle_sd * speckle_sd;
    const double b = std::max(0.0, (m.var - m.mean * m.mean * s2) / ((1.0 + s2) * m.var));
    return m.mean + b * (y - m.mean);
}

class SigmaFilter {
public:
    SigmaFilter(const Raster& in, const SpeckleFilterParams& params)
        : in_(in), p_(params), range_(compute_sigma_range(params.looks, params.sigma)) {
        z98_ = valid_quantile(in, params.point_target_percentile);
    }

    float filter_pixel(int col, int row) const {
        const float y = in_.at(col, row);
        if (in_.is_nodata(y)) return y;

        const int th = p_.target_window / 2;
        if (y >= z98_) {
            int bright = 0;
            for_window(col, row, th, [&](float v) {
                if (v >= z98_) ++bright;
            });
            if (bright >= p_.point_target_min_count) return y;
        }

        const double speckle_sd = 1.0 / std::sqrt(static_cast<double>(p_.looks));
        const double prior = mmse(y, moments(col, row, th, [](float) { return true; }), speckle_sd);

        const double lo = range_.a1 * prior;
        const double hi = range_.a2 * prior;
        const auto in_range = moments(col, row, p_.window / 2, [&](float v) { return v >= lo && v <= hi; });
        if (in_range.n < p_.min_in_range) return static_cast<float>(prior);
        return static_cast<float>(mmse(y, in_range, range_.sigma_vn));
    }

private:
    template <typename F>
    void for_window(int col, int row, int half, F&& f) const {
        const auto& g = in_.geometry;
        const int r0 = std::max(0, row - half), r1 = std::min(g.height - 1, row + half);
        const int c0 = std::max(0, col - half), c1 = std::min(g.width - 1, col + half);
        for (int r = r0; r <= r1; ++r) {
            for (int c = c0; c <= c1; ++c) {
                const float v = in_.at(c, r);
                if (!in_.is_nodata(v)) f(v);
            }
        }
    }

    template <typename Pred>
    Moments moments(int col, int row, int half, Pred keep) const {
        Moments m;
        double sum = 0.0;
        for_window(col, row, half, [&](float v) {
            if (!keep(v)) return;
            sum += v;
            ++m.n;
        });
        if (m.n == 0) return m;
        m.mean = sum / m.n;
        double ss = 0.0;
        for_window(col, row, half, [&](float v) {
            if (!keep(v)) return;
            const double d = v - m.mean;
            ss += d * d;
        });
        m.var = ss / m.n;
        return m;
    }

    const Raster& in_;
    SpeckleFilterParams p_;
    SigmaRangeParams range_;
    float z98_ = 0.0f;
};

}  // namespace

Raster lee_sigma_filter(const Raster& raster, const SpeckleFilterParams& params, unsigned threads) {
    params.validate();
    for (float v : raster.values) {
        if (!raster.is_nodata(v) && v < 0.0f) {
            throw Error(ErrorCode::negative_input, fmt::format("negative linear power value {}", v));
        }
    }
    const SigmaFilter filter(raster, params);
    Raster out(raster.geometry, raster.nodata, raster.nodata);
    const int height = raster.geometry.height;
    const int width = raster.geometry.width;

    auto run_rows = [&](int r0, int r1) {
        for (int r = r0; r < r1; ++r) {
            for (int c = 0; c < width; ++c) out.at(c, r) = filter.filter_pixel(c, r);
        }
    };

    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(height));
    if (threads <= 1) {
        run_rows(0, height);
        return out;
    }
    std::vector<std::jthread> pool;
    const int chunk = (height + static_cast<int>(threads) - 1) / static_cast<int>(threads);
    for (int r0 = 0; r0 < height; r0 += chunk) {
        pool.emplace_back(run_rows, r0, std::min(height, r0 + chunk));
    }
    pool.clear();
    return out;
}

}  // namespace fieldbabel
