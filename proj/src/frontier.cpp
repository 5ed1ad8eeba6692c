#include "powerlines/frontier.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <set>

namespace powerlines {

namespace {

constexpr double kGolden = 0.6180339887498948482;

double golden_min(double lo, double hi, const std::function<double(double)>& f,
                  int iters = 120) {
    double a = lo, b = hi;
    double x1 = b - kGolden * (b - a);
    double x2 = a + kGolden * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int i = 0; i < iters && (b - a) > 1e-14 * (std::abs(a) + std::abs(b) + 1e-12);
         ++i) {
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

struct Surf {
    double e = 0.0, n_const = 0.0, d_const = 0.0;
    double ssr = std::numeric_limits<double>::infinity();
};

struct ObsPoint {
    double n = 0.0, d = 0.0, loss = 0.0;
};

double surf_ssr(std::span<const ObsPoint> pts, double e, double nc, double dc,
                double alpha, double beta) {
    double ssr = 0;
    for (const auto& p : pts) {
        const double r =
            p.loss - (e + nc * std::pow(p.n, -alpha) + dc * std::pow(p.d, -beta));
        ssr += r * r;
    }
    return ssr;
}

// Exact least squares in (E, N_const, D_const) for fixed exponents, with E
// clamped into [0, e_max] and the scale terms kept positive.
Surf inner_solve(std::span<const ObsPoint> pts, double alpha, double beta, double e_max) {
    const std::size_t n = pts.size();
    // Normal equations over basis {1, N^-alpha, D^-beta}.
    double a11 = static_cast<double>(n), a12 = 0, a13 = 0, a22 = 0, a23 = 0, a33 = 0;
    double b1 = 0, b2 = 0, b3 = 0;
    for (const auto& p : pts) {
        const double u = std::pow(p.n, -alpha);
        const double v = std::pow(p.d, -beta);
        a12 += u;
        a13 += v;
        a22 += u * u;
        a23 += u * v;
        a33 += v * v;
        b1 += p.loss;
        b2 += u * p.loss;
        b3 += v * p.loss;
    }

    auto solve3 = [&](double& e, double& nc, double& dc) {
        double m[9] = {a11, a12, a13, a12, a22, a23, a13, a23, a33};
        double rhs[3] = {b1, b2, b3};
        for (int col = 0; col < 3; ++col) {
            int piv = col;
            for (int row = col + 1; row < 3; ++row)
                if (std::abs(m[row * 3 + col]) > std::abs(m[piv * 3 + col])) piv = row;
            if (std::abs(m[piv * 3 + col]) < 1e-280) return false;
            if (piv != col) {
                for (int k = 0; k < 3; ++k) std::swap(m[col * 3 + k], m[piv * 3 + k]);
                std::swap(rhs[col], rhs[piv]);
            }
            for (int row = col + 1; row < 3; ++row) {
                const double f = m[row * 3 + col] / m[col * 3 + col];
                for (int k = col; k < 3; ++k) m[row * 3 + k] -= f * m[col * 3 + k];
                rhs[row] -= f * rhs[col];
            }
        }
        double x[3];
        for (int row = 2; row >= 0; --row) {
            double val = rhs[row];
            for (int k = row + 1; k < 3; ++k) val -= m[row * 3 + k] * x[k];
            x[row] = val / m[row * 3 + row];
        }
        e = x[0];
        nc = x[1];
        dc = x[2];
        return true;
    };

    auto solve2_fixed_e = [&](double e, double& nc, double& dc) {
        const double r2 = b2 - e * a12;
        const double r3 = b3 - e * a13;
        const double det = a22 * a33 - a23 * a23;
        if (std::abs(det) < 1e-280) return false;
        nc = (r2 * a33 - a23 * r3) / det;
        dc = (a22 * r3 - a23 * r2) / det;
        return true;
    };

    Surf best;
    auto consider = [&](double e, double nc, double dc) {
        if (!(e >= 0.0) || e > e_max || nc <= 0.0 || dc <= 0.0) return;
        const double ssr = surf_ssr(pts, e, nc, dc, alpha, beta);
        if (ssr < best.ssr) best = {e, nc, dc, ssr};
    };

    double e, nc, dc;
    if (solve3(e, nc, dc)) {
        consider(e, nc, dc);
        // Clamped variants when the unconstrained solution leaves the box.
        if (e < 0.0 && solve2_fixed_e(0.0, nc, dc)) consider(0.0, nc, dc);
        if (e > e_max && solve2_fixed_e(e_max, nc, dc)) consider(e_max, nc, dc);
    } else if (solve2_fixed_e(0.0, nc, dc)) {
        consider(0.0, nc, dc);
    }
    return best;
}

void require_crit_law(const BatchScalingLaw& crit_law) {
    if (crit_law.kind != BatchLawKind::BcritInDmin)
        throw UnitMismatch("expected a bcrit-in-Dmin law");
    if (crit_law.seq_len <= 0) throw UnitMismatch("crit law carries no seq_len");
}

double point_time(const ParetoPoint& p, std::int64_t seq_len, TimeModel model) {
    const double b_tokens = p.b_sequences * static_cast<double>(seq_len);
    if (model == TimeModel::FlopsPerBatch) return p.c_plus / b_tokens;
    // Steps: the data actually consumed over the batch size.
    const double d_actual = p.actual_tpp * p.n_params;
    return d_actual / b_tokens;
}

}  // namespace

ChinchillaFit fit_chinchilla(const RunSet& rs) { return fit_chinchilla_points(rs.records); }

ChinchillaFit fit_chinchilla_points(std::span<const RunRecord> records) {
    // Lowest loss per (N, D): the surface is defined over best-batch runs.
    std::map<std::pair<std::int64_t, std::int64_t>, double> best_loss;
    for (const auto& r : records) {
        auto key = std::make_pair(r.n_params, r.d_tokens);
        auto [it, inserted] = best_loss.emplace(key, r.val_loss);
        if (!inserted) it->second = std::min(it->second, r.val_loss);
    }

    std::vector<ObsPoint> pts;
    std::set<std::int64_t> n_values, d_values;
    pts.reserve(best_loss.size());
    for (const auto& [key, loss] : best_loss) {
        pts.push_back({static_cast<double>(key.first), static_cast<double>(key.second), loss});
        n_values.insert(key.first);
        d_values.insert(key.second);
    }
    if (pts.size() < 6)
        throw TooFewPoints("fit_chinchilla needs >= 6 (N, D) points, got " +
                           std::to_string(pts.size()));
    if (n_values.size() < 2 || d_values.size() < 2)
        throw RankDeficient("fit_chinchilla needs >= 2 distinct N and >= 2 distinct D");

    double min_loss = pts.front().loss, mean_loss = 0;
    for (const auto& p : pts) {
        min_loss = std::min(min_loss, p.loss);
        mean_loss += p.loss;
    }
    mean_loss /= static_cast<double>(pts.size());
    double ss_tot = 0;
    for (const auto& p : pts) ss_tot += (p.loss - mean_loss) * (p.loss - mean_loss);
    const double e_max = min_loss * (1.0 - 1e-12);

    // Multi-start over the exponent box; E enters through the clamped
    // inner solve, seeded by a coarse grid.
    double best_alpha = 0.3, best_beta = 0.3;
    Surf best;
    for (double alpha = 0.1; alpha <= 0.6 + 1e-9; alpha += 0.1) {
        for (double beta = 0.1; beta <= 0.6 + 1e-9; beta += 0.1) {
            Surf s = inner_solve(pts, alpha, beta, e_max);
            // E-grid candidates keep the start alive when the joint solve
            // leaves the feasible box.
            for (int k = 0; k < 8; ++k) {
                const double e = min_loss * k / 8.0;
                double m22 = 0, m23 = 0, m33 = 0, v2 = 0, v3 = 0;
                for (const auto& p : pts) {
                    const double u = std::pow(p.n, -alpha);
                    const double v = std::pow(p.d, -beta);
                    m22 += u * u;
                    m23 += u * v;
                    m33 += v * v;
                    v2 += u * (p.loss - e);
                    v3 += v * (p.loss - e);
                }
                const double det = m22 * m33 - m23 * m23;
                if (std::abs(det) < 1e-280) continue;
                const double nc = (v2 * m33 - m23 * v3) / det;
                const double dc = (m22 * v3 - m23 * v2) / det;
                if (nc <= 0 || dc <= 0) continue;
                const double ssr = surf_ssr(pts, e, nc, dc, alpha, beta);
                if (ssr < s.ssr) s = {e, nc, dc, ssr};
            }
            if (s.ssr < best.ssr) {
                best = s;
                best_alpha = alpha;
                best_beta = beta;
            }
        }
    }
    if (!std::isfinite(best.ssr))
        throw RankDeficient("no feasible surface candidate found");

    // Coordinate refinement on the exponents with exact inner solves.
    double alpha = best_alpha, beta = best_beta;
    double prev = best.ssr;
    for (int round = 0; round < 60; ++round) {
        alpha = std::exp(golden_min(
            std::log(std::max(alpha / 3.0, 0.01)), std::log(std::min(alpha * 3.0, 2.0)),
            [&](double la) { return inner_solve(pts, std::exp(la), beta, e_max).ssr; }));
        beta = std::exp(golden_min(
            std::log(std::max(beta / 3.0, 0.01)), std::log(std::min(beta * 3.0, 2.0)),
            [&](double lb) { return inner_solve(pts, alpha, std::exp(lb), e_max).ssr; }));
        const Surf s = inner_solve(pts, alpha, beta, e_max);
        if (s.ssr < best.ssr) {
            best = s;
            best_alpha = alpha;
            best_beta = beta;
        }
        if (prev - s.ssr < 1e-16 * (ss_tot + 1e-300) && round > 4) break;
        prev = s.ssr;
    }

    ChinchillaFit fit;
    fit.irreducible = best.e;
    fit.n_const = best.n_const;
    fit.alpha = best_alpha;
    fit.d_const = best.d_const;
    fit.beta = best_beta;
    fit.r_squared = ss_tot > 0 ? 1.0 - best.ssr / ss_tot : 1.0;
    return fit;
}

double contour_dmin(const ChinchillaFit& fit, double loss_target, double n_params) {
    if (n_params <= 0) throw NonPositive("contour_dmin requires positive N");
    const double floor = fit.model_floor(n_params);
    if (loss_target <= floor) throw BelowModelFloor(loss_target, floor);
    return std::pow(fit.d_const / (loss_target - floor), 1.0 / fit.beta);
}

Allocation compute_optimal_allocation(const ChinchillaFit& fit, double c_budget) {
    if (c_budget <= 0) throw NonPositive("compute_optimal_allocation requires C > 0");
    const double g = std::pow(fit.alpha * fit.n_const / (fit.beta * fit.d_const),
                              1.0 / (fit.alpha + fit.beta));
    Allocation a;
    a.n_opt = g * std::pow(c_budget / 6.0, fit.beta / (fit.alpha + fit.beta));
    a.d_opt = (c_budget / 6.0) / a.n_opt;
    a.tpp_opt = a.d_opt / a.n_opt;
    return a;
}

double flops_plus(double n_params, double d_min, double b_sequences,
                  const BatchScalingLaw& crit_law) {
    if (n_params <= 0 || d_min <= 0 || b_sequences < 0)
        throw NonPositive("flops_plus requires positive N, d_min and b >= 0");
    require_crit_law(crit_law);
    const double b_crit = crit_law.predict_sequences(d_min);
    return 6.0 * n_params * d_min * (1.0 + b_sequences / b_crit);
}

double batch_for_budget(double n_params, double d_min, double c_hat,
                        const BatchScalingLaw& crit_law) {
    if (n_params <= 0 || d_min <= 0)
        throw NonPositive("batch_for_budget requires positive N and d_min");
    require_crit_law(crit_law);
    const double c_base = 6.0 * n_params * d_min;
    if (c_hat < c_base) throw BudgetBelowBase(c_hat, c_base);
    return (c_hat / c_base - 1.0) * crit_law.predict_sequences(d_min);
}

IsoLossCurve make_iso_loss_curve(const ChinchillaFit& fit, double loss_target,
                                 double n_params, const BatchScalingLaw& crit_law,
                                 const BatchScalingLaw* bopt_law, const CurveGrid& grid) {
    require_crit_law(crit_law);
    IsoLossCurve curve;
    curve.loss_target = loss_target;
    curve.base_n = static_cast<std::int64_t>(std::llround(n_params));
    curve.seq_len = crit_law.seq_len;

    const double d_min = contour_dmin(fit, loss_target, n_params);
    curve.base_dmin = d_min;
    const double c_base = 6.0 * n_params * d_min;
    const double b_crit = crit_law.predict_sequences(d_min);
    const double b_ref = bopt_law != nullptr ? bopt_law->predict_sequences(d_min)
                                             : (grid.mult_lo - 1.0) * b_crit;

    // Base point: the setting actually trains at its reference optimal
    // batch with no extra-data inflation.
    ParetoPoint base;
    base.n_params = n_params;
    base.d_min = d_min;
    base.b_sequences = b_ref;
    base.c_plus = c_base;
    base.actual_tpp = d_min / n_params;
    curve.points.push_back(base);

    for (int k = 0; k < grid.count; ++k) {
        const double t = grid.count == 1
                             ? 0.0
                             : static_cast<double>(k) / static_cast<double>(grid.count - 1);
        const double mult =
            grid.mult_lo * std::pow(grid.mult_hi / grid.mult_lo, t);
        const double b = (mult - 1.0) * b_crit;
        if (b <= b_ref) continue;  // below the reference batch the relation is moot
        ParetoPoint p;
        p.n_params = n_params;
        p.d_min = d_min;
        p.b_sequences = b;
        p.c_plus = mult * c_base;
        p.actual_tpp = mult * d_min / n_params;  // extra_data(d_min, ., b) / N
        curve.points.push_back(p);
    }
    return curve;
}

std::vector<ParetoPoint> annotate_dominance(std::span<const IsoLossCurve> curves,
                                            TimeModel model) {
    if (curves.empty()) return {};
    const double target = curves.front().loss_target;
    std::vector<ParetoPoint> all;
    for (const auto& c : curves) {
        if (c.loss_target != target)
            throw MixedLossTargets("curves mix loss targets " + std::to_string(target) +
                                   " and " + std::to_string(c.loss_target));
        for (const auto& p : c.points) {
            ParetoPoint q = p;
            q.time = point_time(q, c.seq_len, model);
            q.dominated = false;
            all.push_back(q);
        }
    }

    std::stable_sort(all.begin(), all.end(), [](const ParetoPoint& a, const ParetoPoint& b) {
        if (a.time != b.time) return a.time < b.time;
        return a.c_plus < b.c_plus;
    });

    // Sweep in time order: a point is dominated iff some point no later in
    // time has c_plus <= its own, with strict improvement somewhere.
    double best_c = std::numeric_limits<double>::infinity();
    double best_c_time = std::numeric_limits<double>::infinity();
    for (auto& p : all) {
        // Exact ties in both coordinates dominate nothing; best_c_time is
        // the earliest time at which the running minimum was reached.
        if (best_c < p.c_plus || (best_c == p.c_plus && best_c_time < p.time))
            p.dominated = true;
        if (p.c_plus < best_c) {
            best_c = p.c_plus;
            best_c_time = p.time;
        }
    }
    return all;
}

std::vector<ParetoPoint> pareto_frontier(std::span<const IsoLossCurve> curves,
                                         TimeModel model) {
    std::vector<ParetoPoint> all = annotate_dominance(curves, model);
    std::vector<ParetoPoint> frontier;
    for (const auto& p : all)
        if (!p.dominated) frontier.push_back(p);
    return frontier;
}

}  // namespace powerlines
