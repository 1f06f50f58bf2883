#pragma once

#include <span>
#include <string>
#include <vector>

#include "edgeperf/profiles.hpp"

namespace edgeperf {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

struct LogCurve {
    double alpha = 0.0;
    double beta = 0.0;
};

struct ExpDecay {
    double A = 0.0;
    double lambda = 0.0;
    double C = 0.0;
};

template <typename Coeffs>
struct FitResult {
    Coeffs coefficients{};
    double residual_sse = 0.0;
    std::size_t points_used = 0;
    Warnings warnings;
};

enum class PiecewiseKind { power, energy };

struct PiecewiseFit {
    // Exactly one of these is meaningful, selected by `kind`.
    PiecewisePowerModel power;
    PiecewiseEnergyModel energy;
    PiecewiseKind kind = PiecewiseKind::power;
};

/// OLS of latency on [I_pad^2, I_pad, 1] over prefill rows whose input
/// length is a multiple of 64. Needs three distinct padded lengths.
FitResult<PrefillLatencyCoeffs> fit_prefill_latency(std::span<const MeasurementRecord> records);

/// No-intercept OLS of latency on [O, I*O + O*(O-1)/2] over decode rows.
FitResult<DecodeLatencyCoeffs> fit_decode_latency(std::span<const MeasurementRecord> records);

/// OLS of y on [log x, 1] over points with x >= min_x.
FitResult<LogCurve> fit_log_curve(std::span<const Point> points, double min_x = 1.0,
                                  LogBase base = LogBase::natural);

struct ExpDecayOptions {
    double lambda_min = 1e-5;
    double lambda_max = 1.0;
    int grid_points = 241;
    double lambda_rel_tol = 1e-10;
};

/// y = A exp(-lambda x) + C. Scans lambda on a geometric grid, solves (A, C)
/// in closed form at each node, then golden-section refines around the best
/// node. If the best decay amplitude is not positive, returns the constant
/// fit (A = 0, lambda = 0) with a NoDecayDetected warning.
FitResult<ExpDecay> fit_exp_decay(std::span<const Point> points, const ExpDecayOptions& options = {});

/// Breakpoint search over observed x values: constant (power) or exp-decay
/// (energy) on the left, log curve on the right, minimum combined SSE.
/// A single left branch spanning all points is also a candidate and wins
/// ties; among breakpoints the smallest wins ties.
FitResult<PiecewiseFit> fit_piecewise(std::span<const Point> points, PiecewiseKind kind,
                                      LogBase base = LogBase::natural);

/// Mean absolute percentage error, in percent.
double mape(std::span<const double> predictions, std::span<const double> actuals);

/// Profile-file JSON fragments, e.g. {"prefill_latency": {...}}.
std::string to_json_fragment(const FitResult<PrefillLatencyCoeffs>& fit);
std::string to_json_fragment(const FitResult<DecodeLatencyCoeffs>& fit);
std::string to_json_fragment(const FitResult<PiecewiseFit>& fit, std::string_view key);

}  // namespace edgeperf
