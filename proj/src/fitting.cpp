#include "edgeperf/fitting.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <set>

#include "edgeperf/energy.hpp"
#include "edgeperf/latency.hpp"
#include "json.hpp"
#include "profile_json.hpp"

namespace edgeperf {

namespace {

// Switch from normal equations to QR above this design-matrix condition.
constexpr double kConditionLimit = 1e8;

struct LinearSolution {
    Eigen::VectorXd coeffs;
    double sse = 0.0;
};

// Ordinary least squares. Columns are equilibrated first, then solved
// through the normal equations unless the estimated condition number of the
// design matrix exceeds kConditionLimit, in which case a column-pivoting QR
// is used. Rank deficiency is reported as DegenerateDesign.
LinearSolution least_squares(const Eigen::MatrixXd& design, const Eigen::VectorXd& y) {
    const Eigen::Index cols = design.cols();
    Eigen::VectorXd scale(cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        scale(j) = design.col(j).cwiseAbs().maxCoeff();
        if (!(scale(j) > 0)) fail(ErrorCode::degenerate_design, "design column " + std::to_string(j) + " is all zero");
    }
    const Eigen::MatrixXd scaled = design * scale.cwiseInverse().asDiagonal();

    const Eigen::MatrixXd gram = scaled.transpose() * scaled;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    // Eigen's rcond estimate misses exactly singular Gram matrices, so the
    // pivot spread is checked as well.
    double rcond = 0.0;
    if (ldlt.info() == Eigen::Success) {
        const Eigen::VectorXd pivots = ldlt.vectorD().cwiseAbs();
        rcond = std::min(ldlt.rcond(), pivots.minCoeff() / pivots.maxCoeff());
    }
    const double condition = rcond > 0 ? std::sqrt(1.0 / rcond) : std::numeric_limits<double>::infinity();

    Eigen::VectorXd solution;
    if (condition <= kConditionLimit) {
        solution = ldlt.solve(scaled.transpose() * y);
    } else {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(scaled);
        if (qr.rank() < cols) fail(ErrorCode::degenerate_design, "design matrix is rank deficient (collinear features)");
        solution = qr.solve(y);
    }
    LinearSolution out;
    out.coeffs = solution.cwiseQuotient(scale);
    out.sse = (y - design * out.coeffs).squaredNorm();
    return out;
}

struct ExpNode {
    double lambda = 0.0;
    double A = 0.0;
    double C = 0.0;
    double sse = std::numeric_limits<double>::infinity();
};

// Closed-form (A, C) for a fixed decay rate.
ExpNode solve_amplitude(std::span<const Point> pts, double lambda) {
    const double count = static_cast<double>(pts.size());
    double mean_u = 0.0, mean_y = 0.0, sum_u2 = 0.0;
    std::vector<double> u(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        u[i] = std::exp(-lambda * pts[i].x);
        mean_u += u[i];
        mean_y += pts[i].y;
        sum_u2 += u[i] * u[i];
    }
    mean_u /= count;
    mean_y /= count;
    double suu = 0.0, suy = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        suu += (u[i] - mean_u) * (u[i] - mean_u);
        suy += (u[i] - mean_u) * (pts[i].y - mean_y);
    }
    ExpNode node;
    node.lambda = lambda;
    if (suu > 1e-14 * sum_u2) {
        node.A = suy / suu;
        node.C = mean_y - node.A * mean_u;
    } else {
        node.A = 0.0;
        node.C = mean_y;
    }
    node.sse = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double r = pts[i].y - node.A * u[i] - node.C;
        node.sse += r * r;
    }
    return node;
}

double mean_sse(std::span<const Point> pts, double& mean) {
    mean = 0.0;
    for (const auto& p : pts) mean += p.y;
    mean /= static_cast<double>(pts.size());
    double sse = 0.0;
    for (const auto& p : pts) sse += (p.y - mean) * (p.y - mean);
    return sse;
}

std::size_t distinct_x(std::span<const Point> pts) {
    std::set<double> xs;
    for (const auto& p : pts) xs.insert(p.x);
    return xs.size();
}

}  // namespace

FitResult<PrefillLatencyCoeffs> fit_prefill_latency(std::span<const MeasurementRecord> records) {
    std::vector<double> pads, lat;
    std::set<Tokens> distinct;
    for (const auto& r : records) {
        if (r.phase != Phase::prefill || r.input_len % 64 != 0) continue;
        const Tokens pad = padded_length(r.input_len);
        distinct.insert(pad);
        pads.push_back(static_cast<double>(pad));
        lat.push_back(r.latency_s);
    }
    if (distinct.size() < 3) {
        fail(ErrorCode::insufficient_data, "prefill fit needs 3 distinct padded lengths, found " +
                                               std::to_string(distinct.size()));
    }
    const auto rows = static_cast<Eigen::Index>(pads.size());
    Eigen::MatrixXd design(rows, 3);
    Eigen::VectorXd y(rows);
    for (Eigen::Index i = 0; i < rows; ++i) {
        design(i, 0) = pads[i] * pads[i];
        design(i, 1) = pads[i];
        design(i, 2) = 1.0;
        y(i) = lat[i];
    }
    auto sol = least_squares(design, y);
    FitResult<PrefillLatencyCoeffs> out;
    out.coefficients = {sol.coeffs(0), sol.coeffs(1), sol.coeffs(2)};
    out.residual_sse = sol.sse;
    out.points_used = pads.size();
    return out;
}

FitResult<DecodeLatencyCoeffs> fit_decode_latency(std::span<const MeasurementRecord> records) {
    std::vector<std::pair<double, double>> features;
    std::vector<double> lat;
    for (const auto& r : records) {
        if (r.phase != Phase::decode) continue;
        const double in = static_cast<double>(r.input_len);
        const double o = static_cast<double>(r.output_len);
        features.emplace_back(o, in * o + o * (o - 1.0) / 2.0);
        lat.push_back(r.latency_s);
    }
    std::set<std::pair<double, double>> distinct(features.begin(), features.end());
    if (distinct.size() < 2) {
        fail(ErrorCode::insufficient_data, "decode fit needs 2 rows with distinct features, found " +
                                               std::to_string(distinct.size()));
    }
    const auto rows = static_cast<Eigen::Index>(features.size());
    Eigen::MatrixXd design(rows, 2);
    Eigen::VectorXd y(rows);
    for (Eigen::Index i = 0; i < rows; ++i) {
        design(i, 0) = features[i].first;
        design(i, 1) = features[i].second;
        y(i) = lat[i];
    }
    auto sol = least_squares(design, y);
    FitResult<DecodeLatencyCoeffs> out;
    out.coefficients = {sol.coeffs(1), sol.coeffs(0)};
    out.residual_sse = sol.sse;
    out.points_used = features.size();
    return out;
}

FitResult<LogCurve> fit_log_curve(std::span<const Point> points, double min_x, LogBase base) {
    std::vector<Point> used;
    for (const auto& p : points) {
        if (p.x < min_x) continue;
        if (!(p.x > 0)) fail(ErrorCode::domain_error, "log fit needs positive x");
        used.push_back(p);
    }
    if (used.size() < 2 || distinct_x(used) < 2) {
        fail(ErrorCode::insufficient_data, "log fit needs 2 distinct x values >= min_x, found " +
                                               std::to_string(distinct_x(used)));
    }
    const auto rows = static_cast<Eigen::Index>(used.size());
    Eigen::MatrixXd design(rows, 2);
    Eigen::VectorXd y(rows);
    for (Eigen::Index i = 0; i < rows; ++i) {
        design(i, 0) = log_of(used[i].x, base);
        design(i, 1) = 1.0;
        y(i) = used[i].y;
    }
    auto sol = least_squares(design, y);
    FitResult<LogCurve> out;
    out.coefficients = {sol.coeffs(0), sol.coeffs(1)};
    out.residual_sse = sol.sse;
    out.points_used = used.size();
    return out;
}

FitResult<ExpDecay> fit_exp_decay(std::span<const Point> points, const ExpDecayOptions& options) {
    if (points.size() < 4) {
        fail(ErrorCode::insufficient_data, "exponential decay fit needs 4 points, found " +
                                               std::to_string(points.size()));
    }
    for (const auto& p : points) {
        if (!(p.y > 0)) fail(ErrorCode::domain_error, "exponential decay fit needs positive y");
    }
    const int n = std::max(options.grid_points, 3);
    const double log_lo = std::log(options.lambda_min);
    const double log_hi = std::log(options.lambda_max);
    auto lambda_at = [&](int k) { return std::exp(log_lo + (log_hi - log_lo) * k / (n - 1)); };

    int best_k = 0;
    ExpNode best = solve_amplitude(points, lambda_at(0));
    for (int k = 1; k < n; ++k) {
        auto node = solve_amplitude(points, lambda_at(k));
        if (node.sse < best.sse) {
            best = node;
            best_k = k;
        }
    }

    // Golden-section refinement in log(lambda) between the neighbouring nodes.
    double lo = std::log(lambda_at(std::max(best_k - 1, 0)));
    double hi = std::log(lambda_at(std::min(best_k + 1, n - 1)));
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - inv_phi * (hi - lo);
    double x2 = lo + inv_phi * (hi - lo);
    auto f1 = solve_amplitude(points, std::exp(x1));
    auto f2 = solve_amplitude(points, std::exp(x2));
    for (int iter = 0; iter < 200 && (hi - lo) > options.lambda_rel_tol; ++iter) {
        if (f1.sse <= f2.sse) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = solve_amplitude(points, std::exp(x1));
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = solve_amplitude(points, std::exp(x2));
        }
    }
    for (const auto& cand : {f1, f2}) {
        if (cand.sse < best.sse) best = cand;
    }

    FitResult<ExpDecay> out;
    out.points_used = points.size();
    if (best.A > 0) {
        out.coefficients = {best.A, best.lambda, best.C};
        out.residual_sse = best.sse;
    } else {
        double mean = 0.0;
        out.residual_sse = mean_sse(points, mean);
        out.coefficients = {0.0, 0.0, mean};
        out.warnings.push_back("NoDecayDetected: best decay amplitude is not positive; returning constant fit");
    }
    return out;
}

FitResult<PiecewiseFit> fit_piecewise(std::span<const Point> points, PiecewiseKind kind, LogBase base) {
    if (points.size() < 6) {
        fail(ErrorCode::insufficient_data, "piecewise fit needs 6 points, found " + std::to_string(points.size()));
    }
    std::vector<Point> sorted(points.begin(), points.end());
    std::stable_sort(sorted.begin(), sorted.end(), [](const Point& a, const Point& b) { return a.x < b.x; });
    for (const auto& p : sorted) {
        if (!(p.x > 0)) fail(ErrorCode::domain_error, "piecewise fit needs positive x");
    }
    const std::size_t min_left = kind == PiecewiseKind::power ? 3 : 4;
    constexpr std::size_t min_right = 3;

    struct Left {
        double sse;
        double floor = 0.0;
        ExpDecay decay{};
    };
    auto fit_left = [&](std::span<const Point> pts) -> Left {
        if (kind == PiecewiseKind::power) {
            Left l{};
            l.sse = mean_sse(pts, l.floor);
            return l;
        }
        auto f = fit_exp_decay(pts);
        return Left{f.residual_sse, 0.0, f.coefficients};
    };
    auto make_fit = [&](const Left& left, double threshold, LogCurve right) {
        PiecewiseFit fit;
        fit.kind = kind;
        if (kind == PiecewiseKind::power) {
            fit.power = {left.floor, threshold, right.alpha, right.beta};
        } else {
            fit.energy.exp_A = left.decay.A;
            fit.energy.exp_lambda = left.decay.lambda;
            fit.energy.exp_C = left.decay.C;
            fit.energy.threshold = threshold;
            fit.energy.log_alpha = right.alpha;
            fit.energy.log_beta = right.beta;
        }
        return fit;
    };

    std::optional<FitResult<PiecewiseFit>> best;
    for (std::size_t split = min_left; split + min_right <= sorted.size(); ++split) {
        // Breakpoints are observed x values; all copies of a value stay left.
        if (sorted[split - 1].x == sorted[split].x) continue;
        std::span<const Point> left_pts(sorted.data(), split);
        std::span<const Point> right_pts(sorted.data() + split, sorted.size() - split);
        if (distinct_x(right_pts) < 2) continue;
        const Left left = fit_left(left_pts);
        const auto right = fit_log_curve(right_pts, 0.0, base);
        const double sse = left.sse + right.residual_sse;
        // Near-equal SSEs count as ties so the smallest breakpoint wins.
        if (!best || sse < best->residual_sse * (1.0 - 1e-9) - 1e-24) {
            best = FitResult<PiecewiseFit>{make_fit(left, sorted[split - 1].x, right.coefficients), sse,
                                           sorted.size(), {}};
        }
    }

    // Single left branch over every point; preferred when it does as well.
    std::optional<FitResult<PiecewiseFit>> single;
    if (sorted.size() >= min_left) {
        const Left left = fit_left(sorted);
        single = FitResult<PiecewiseFit>{make_fit(left, sorted.back().x, LogCurve{}), left.sse, sorted.size(), {}};
    }
    if (!best && !single) {
        fail(ErrorCode::insufficient_data, "no breakpoint leaves enough points on both sides");
    }
    if (single && (!best || single->residual_sse <= best->residual_sse * (1.0 + 1e-9) + 1e-24)) {
        return *single;
    }
    return *best;
}

double mape(std::span<const double> predictions, std::span<const double> actuals) {
    if (predictions.size() != actuals.size()) {
        fail(ErrorCode::length_mismatch, std::to_string(predictions.size()) + " predictions vs " +
                                             std::to_string(actuals.size()) + " actuals");
    }
    if (actuals.empty()) fail(ErrorCode::empty_input, "MAPE of an empty series");
    double sum = 0.0;
    for (std::size_t i = 0; i < actuals.size(); ++i) {
        if (actuals[i] == 0.0) fail(ErrorCode::zero_actual, "actual value at index " + std::to_string(i) + " is zero");
        sum += std::abs(predictions[i] - actuals[i]) / std::abs(actuals[i]);
    }
    return 100.0 * sum / static_cast<double>(actuals.size());
}

namespace {

nlohmann::ordered_json fit_meta(double sse, std::size_t points) {
    nlohmann::ordered_json meta;
    meta["residual_sse"] = sse;
    meta["points_used"] = points;
    return meta;
}

}  // namespace

std::string to_json_fragment(const FitResult<PrefillLatencyCoeffs>& fit) {
    nlohmann::ordered_json body;
    body["a"] = fit.coefficients.a;
    body["b"] = fit.coefficients.b;
    body["c"] = fit.coefficients.c;
    body["fit"] = fit_meta(fit.residual_sse, fit.points_used);
    nlohmann::ordered_json doc;
    doc["prefill_latency"] = std::move(body);
    return doc.dump(2);
}

std::string to_json_fragment(const FitResult<DecodeLatencyCoeffs>& fit) {
    nlohmann::ordered_json body;
    body["m"] = fit.coefficients.m;
    body["n"] = fit.coefficients.n;
    body["fit"] = fit_meta(fit.residual_sse, fit.points_used);
    nlohmann::ordered_json doc;
    doc["decode_latency"] = std::move(body);
    return doc.dump(2);
}

std::string to_json_fragment(const FitResult<PiecewiseFit>& fit, std::string_view key) {
    auto body = fit.coefficients.kind == PiecewiseKind::power ? detail::power_json(fit.coefficients.power)
                                                              : detail::energy_json(fit.coefficients.energy);
    body["fit"] = fit_meta(fit.residual_sse, fit.points_used);
    nlohmann::ordered_json doc;
    doc[std::string(key)] = std::move(body);
    return doc.dump(2);
}

}  // namespace edgeperf
