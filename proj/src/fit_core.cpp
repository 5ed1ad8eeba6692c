#include "powerlines/fit_core.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <map>
#include <numeric>

#include "powerlines/rng.hpp"

namespace powerlines {

namespace {

constexpr double kGolden = 0.6180339887498948482;

// Minimizes f on [lo, hi] by golden-section. f must be continuous; with a
// unique interior minimum this converges to it, otherwise to a local one.
double golden_min(double lo, double hi, const std::function<double(double)>& f,
                  int iters = 160) {
    double a = lo, b = hi;
    double x1 = b - kGolden * (b - a);
    double x2 = a + kGolden * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int i = 0; i < iters && (b - a) > 1e-15 * (std::abs(a) + std::abs(b)); ++i) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - kGolden * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + kGolden * (b - a);
            f2 = f(x2);
        }
    }
    return f1 <= f2 ? x1 : x2;
}

struct LineFit {
    double intercept = 0.0;
    double slope = 0.0;
    double r_squared = 1.0;
};

LineFit ols_line(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    if (syy > 0) {
        double ss_res = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = y[i] - (f.intercept + f.slope * x[i]);
            ss_res += r * r;
        }
        f.r_squared = 1.0 - ss_res / syy;
    }
    return f;
}

// Gaussian elimination with partial pivoting; a is n x n row-major.
bool solve_linear(std::vector<double> a, std::vector<double> b, int n,
                  std::vector<double>& out) {
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int row = col + 1; row < n; ++row)
            if (std::abs(a[row * n + col]) > std::abs(a[pivot * n + col])) pivot = row;
        if (std::abs(a[pivot * n + col]) < 1e-300) return false;
        if (pivot != col) {
            for (int k = 0; k < n; ++k) std::swap(a[col * n + k], a[pivot * n + k]);
            std::swap(b[col], b[pivot]);
        }
        for (int row = col + 1; row < n; ++row) {
            const double m = a[row * n + col] / a[col * n + col];
            for (int k = col; k < n; ++k) a[row * n + k] -= m * a[col * n + k];
            b[row] -= m * b[col];
        }
    }
    out.assign(n, 0.0);
    for (int row = n - 1; row >= 0; --row) {
        double v = b[row];
        for (int k = row + 1; k < n; ++k) v -= a[row * n + k] * out[k];
        out[row] = v / a[row * n + row];
    }
    return true;
}

double percentile(std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    const double h = p * static_cast<double>(v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(h);
    if (lo + 1 >= v.size()) return v.back();
    return v[lo] + (h - static_cast<double>(lo)) * (v[lo + 1] - v[lo]);
}

struct SatCandidate {
    double irreducible = 0.0;
    double scale = 0.0;
    double beta = 0.0;
    double ssr = std::numeric_limits<double>::infinity();
};

double sat_ssr(std::span<const LossAtData> pts, double e, double scale, double beta) {
    double ssr = 0;
    for (const auto& p : pts) {
        const double r = p.loss - (e + scale * std::pow(p.d_tokens, -beta));
        ssr += r * r;
    }
    return ssr;
}

// Given E, regress ln(L - E) on ln D; invalid when the slope is not a decay.
SatCandidate sat_candidate_for_e(std::span<const LossAtData> pts, double e) {
    SatCandidate c;
    c.irreducible = e;
    std::vector<double> lx, ly;
    lx.reserve(pts.size());
    ly.reserve(pts.size());
    for (const auto& p : pts) {
        if (p.loss - e <= 0) return c;
        lx.push_back(std::log(p.d_tokens));
        ly.push_back(std::log(p.loss - e));
    }
    const LineFit f = ols_line(lx, ly);
    if (f.slope >= 0) return c;
    c.beta = -f.slope;
    c.scale = std::exp(f.intercept);
    c.ssr = sat_ssr(pts, e, c.scale, c.beta);
    return c;
}

// For fixed beta the model is linear in (E, scale); solve that least-squares
// problem with E clamped into [0, e_max] and scale kept positive.
SatCandidate sat_candidate_for_beta(std::span<const LossAtData> pts, double beta,
                                    double e_max) {
    SatCandidate c;
    c.beta = beta;
    const std::size_t n = pts.size();
    double s1 = static_cast<double>(n), sb = 0, sbb = 0, sy = 0, sby = 0;
    for (const auto& p : pts) {
        const double b = std::pow(p.d_tokens, -beta);
        sb += b;
        sbb += b * b;
        sy += p.loss;
        sby += b * p.loss;
    }
    const double det = s1 * sbb - sb * sb;
    double e, scale;
    if (std::abs(det) < 1e-300) return c;
    e = (sy * sbb - sb * sby) / det;
    scale = (s1 * sby - sb * sy) / det;
    if (e < 0.0 || scale <= 0.0) {
        e = 0.0;
        scale = sby / sbb;
    } else if (e > e_max) {
        e = e_max;
        scale = (sby - e * sb) / sbb;
    }
    if (scale <= 0.0) return c;
    c.irreducible = e;
    c.scale = scale;
    c.ssr = sat_ssr(pts, e, scale, beta);
    return c;
}

}  // namespace

bool SaturatingLawFit::within_domain(double d, double log_slack) const {
    const double lo = std::log(fit_domain_lo), hi = std::log(fit_domain_hi);
    const double slack = log_slack * (hi - lo);
    const double ld = std::log(d);
    return ld >= lo - slack && ld <= hi + slack;
}

PowerLawFit fit_power_law(std::span<const XY> points) {
    if (points.size() < 2)
        throw TooFewPoints("fit_power_law needs >= 2 points, got " +
                           std::to_string(points.size()));
    std::vector<double> lx, ly;
    lx.reserve(points.size());
    ly.reserve(points.size());
    for (const auto& p : points) {
        if (p.x <= 0 || p.y <= 0)
            throw NonPositive("fit_power_law requires strictly positive points");
        lx.push_back(std::log(p.x));
        ly.push_back(std::log(p.y));
    }
    const double x0 = lx.front();
    if (std::all_of(lx.begin(), lx.end(), [&](double v) { return v == x0; }))
        throw DegenerateInput("all x values equal");

    const LineFit f = ols_line(lx, ly);
    PowerLawFit fit;
    fit.coeff = std::exp(f.intercept);
    fit.exponent = f.slope;
    fit.r_squared = f.r_squared;
    fit.n_points = static_cast<int>(points.size());
    return fit;
}

SaturatingLawFit fit_saturating_law(std::span<const LossAtData> points) {
    if (points.size() < 3)
        throw TooFewPoints("fit_saturating_law needs >= 3 points, got " +
                           std::to_string(points.size()));
    for (const auto& p : points)
        if (p.d_tokens <= 0 || p.loss <= 0)
            throw NonPositive("fit_saturating_law requires positive data and loss");
    {
        std::vector<double> ds;
        for (const auto& p : points) ds.push_back(p.d_tokens);
        std::sort(ds.begin(), ds.end());
        if (std::adjacent_find(ds.begin(), ds.end()) != ds.end())
            throw DegenerateInput("duplicate D values in saturating-law fit");
    }

    double min_loss = points[0].loss, mean_loss = 0;
    double dom_lo = points[0].d_tokens, dom_hi = points[0].d_tokens;
    for (const auto& p : points) {
        min_loss = std::min(min_loss, p.loss);
        mean_loss += p.loss;
        dom_lo = std::min(dom_lo, p.d_tokens);
        dom_hi = std::max(dom_hi, p.d_tokens);
    }
    mean_loss /= static_cast<double>(points.size());
    double ss_tot = 0;
    for (const auto& p : points) ss_tot += (p.loss - mean_loss) * (p.loss - mean_loss);

    // Keep E strictly below the lowest observed loss so every observed
    // target stays invertible.
    const double e_max = min_loss * (1.0 - 1e-12);

    // Multi-start over E, each with a closed-form inner power law.
    constexpr int kGrid = 32;
    SatCandidate best;
    int best_k = 0;
    for (int k = 0; k < kGrid; ++k) {
        const double e = min_loss * static_cast<double>(k) / kGrid;
        SatCandidate c = sat_candidate_for_e(points, e);
        if (c.ssr < best.ssr) {
            best = c;
            best_k = k;
        }
    }
    if (!std::isfinite(best.ssr))
        throw NoDescent("no E grid candidate admits a decaying power law");

    // Local refinement of E around the best grid cell.
    {
        const double lo = min_loss * std::max(0, best_k - 1) / kGrid;
        const double hi = std::min(e_max, min_loss * (best_k + 1.0) / kGrid);
        const double e_ref = golden_min(lo, hi, [&](double e) {
            return sat_candidate_for_e(points, e).ssr;
        });
        SatCandidate c = sat_candidate_for_e(points, e_ref);
        if (c.ssr < best.ssr) best = c;
    }

    // Polish in loss space: profile the SSR over beta with (E, scale)
    // solved exactly per beta.
    {
        const double lb = std::log(std::max(best.beta / 8.0, 1e-6));
        const double ub = std::log(best.beta * 8.0);
        const double lbeta = golden_min(lb, ub, [&](double lbeta_) {
            return sat_candidate_for_beta(points, std::exp(lbeta_), e_max).ssr;
        });
        SatCandidate c = sat_candidate_for_beta(points, std::exp(lbeta), e_max);
        if (c.ssr < best.ssr) best = c;
    }

    if (best.ssr >= ss_tot) throw NoDescent("fit no better than a flat loss");

    SaturatingLawFit fit;
    fit.irreducible = best.irreducible;
    fit.scale = best.scale;
    fit.beta = best.beta;
    fit.r_squared = ss_tot > 0 ? 1.0 - best.ssr / ss_tot : 1.0;
    fit.fit_domain_lo = dom_lo;
    fit.fit_domain_hi = dom_hi;
    return fit;
}

InvertResult invert_saturating(const SaturatingLawFit& fit, double loss_target) {
    if (loss_target <= fit.irreducible)
        throw TargetBelowIrreducible(loss_target, fit.irreducible);
    InvertResult r;
    r.d_tokens = std::pow(fit.scale / (loss_target - fit.irreducible), 1.0 / fit.beta);
    r.extrapolated = !fit.within_domain(r.d_tokens);
    return r;
}

double fit_log_parabola_min(std::span<const XY> points) {
    // Lowest loss per x first: repeated sweeps contribute their best run.
    std::map<double, double> best;
    for (const auto& p : points) {
        if (p.x <= 0 || p.y <= 0)
            throw NonPositive("fit_log_parabola_min requires positive points");
        auto [it, inserted] = best.emplace(p.x, p.y);
        if (!inserted) it->second = std::min(it->second, p.y);
    }
    if (best.size() < 3)
        throw TooFewPoints("fit_log_parabola_min needs >= 3 distinct x, got " +
                           std::to_string(best.size()));

    const std::size_t n = best.size();
    double s0 = static_cast<double>(n), s1 = 0, s2 = 0, s3 = 0, s4 = 0;
    double t0 = 0, t1 = 0, t2 = 0;
    // Center the abscissa for conditioning.
    double mean_u = 0;
    for (const auto& [x, y] : best) mean_u += std::log(x);
    mean_u /= static_cast<double>(n);
    for (const auto& [x, y] : best) {
        const double u = std::log(x) - mean_u;
        const double v = std::log(y);
        const double u2 = u * u;
        s1 += u;
        s2 += u2;
        s3 += u2 * u;
        s4 += u2 * u2;
        t0 += v;
        t1 += u * v;
        t2 += u2 * v;
    }
    std::vector<double> coeffs;
    if (!solve_linear({s0, s1, s2, s1, s2, s3, s2, s3, s4}, {t0, t1, t2}, 3, coeffs))
        throw DegenerateInput("singular system in log-parabola fit");
    const double b = coeffs[1], a = coeffs[2];
    if (a <= 0) throw NoInteriorMinimum("quadratic coefficient is not positive");
    return std::exp(mean_u - b / (2.0 * a));
}

TradeoffFit fit_hyperbolic_tradeoff(std::span<const TradeoffPoint> pairs,
                                    std::vector<std::string>* warnings) {
    if (pairs.size() < 3)
        throw TooFewPoints("fit_hyperbolic_tradeoff needs >= 3 pairs, got " +
                           std::to_string(pairs.size()));
    for (const auto& p : pairs) {
        if (p.steps <= 0) throw InfeasibleSmin("steps must be positive");
        if (p.d_tokens <= 0) throw NonPositive("d_tokens must be positive");
    }

    std::vector<TradeoffPoint> pts(pairs.begin(), pairs.end());
    std::sort(pts.begin(), pts.end(),
              [](const TradeoffPoint& a, const TradeoffPoint& b) { return a.steps < b.steps; });
    for (std::size_t i = 1; i < pts.size(); ++i) {
        if (pts[i].d_tokens >= pts[i - 1].d_tokens) {
            if (warnings)
                warnings->push_back("tradeoff pairs are not strictly decreasing in steps");
            break;
        }
    }

    const double s_floor = pts.front().steps;
    const std::size_t n = pts.size();

    // D(S) = d_min * S / (S - s_min), so the optimal ln d_min is a mean.
    auto objective = [&](double s_min) {
        double mean = 0;
        for (const auto& p : pts) mean += std::log(p.d_tokens) - std::log(p.steps / (p.steps - s_min));
        mean /= static_cast<double>(n);
        double ssr = 0;
        for (const auto& p : pts) {
            const double r = std::log(p.d_tokens) -
                             (mean + std::log(p.steps / (p.steps - s_min)));
            ssr += r * r;
        }
        return ssr;
    };

    // Nested 1-D search: scan s_min below the smallest observed S, then
    // refine the best cell by golden-section.
    constexpr int kGrid = 512;
    int best_j = 0;
    double best_val = std::numeric_limits<double>::infinity();
    auto s_at = [&](int j) {
        return s_floor * (static_cast<double>(j) + 0.5) / (kGrid + 1.0);
    };
    for (int j = 0; j < kGrid; ++j) {
        const double v = objective(s_at(j));
        if (v < best_val) {
            best_val = v;
            best_j = j;
        }
    }
    const double lo = s_at(std::max(0, best_j - 1));
    const double hi = std::min(s_at(best_j + 1), s_floor * (1.0 - 1e-12));
    const double s_min = golden_min(lo, hi, objective, 220);

    double mean = 0;
    for (const auto& p : pts) mean += std::log(p.d_tokens) - std::log(p.steps / (p.steps - s_min));
    mean /= static_cast<double>(n);

    TradeoffFit fit;
    fit.s_min = s_min;
    fit.d_min = std::exp(mean);

    double mean_ld = 0;
    for (const auto& p : pts) mean_ld += std::log(p.d_tokens);
    mean_ld /= static_cast<double>(n);
    double ss_tot = 0;
    for (const auto& p : pts) {
        const double d = std::log(p.d_tokens) - mean_ld;
        ss_tot += d * d;
    }
    const double ssr = objective(s_min);
    fit.r_squared_log = ss_tot > 0 ? 1.0 - ssr / ss_tot : 1.0;
    return fit;
}

BootstrapQuantiles bootstrap_exponent(std::span<const XY> points, double frac, int iters,
                                      std::uint64_t seed) {
    if (points.size() < 5)
        throw TooFewPoints("bootstrap_exponent needs >= 5 points, got " +
                           std::to_string(points.size()));
    const std::size_t n = points.size();
    const std::size_t k =
        static_cast<std::size_t>(std::ceil(frac * static_cast<double>(n)));

    std::vector<double> exponents;
    exponents.reserve(iters);
    std::vector<std::size_t> idx(n);
    std::vector<XY> subset(k);
    for (int it = 0; it < iters; ++it) {
        rng::Stream stream(rng::derive(seed, static_cast<std::uint64_t>(it)));
        std::iota(idx.begin(), idx.end(), 0);
        // Partial Fisher-Yates: the first k entries form the subset.
        for (std::size_t i = 0; i < k; ++i) {
            const std::size_t j = i + stream.next_below(n - i);
            std::swap(idx[i], idx[j]);
        }
        for (std::size_t i = 0; i < k; ++i) subset[i] = points[idx[i]];
        exponents.push_back(fit_power_law(subset).exponent);
    }
    return {percentile(exponents, 0.10), percentile(exponents, 0.90)};
}

}  // namespace powerlines
