#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mmn/inverse.hpp"
#include "mmn/simulators.hpp"

namespace mmn {

// Mean over output dimensions of the squared difference between the TRUE
// simulator's output at the proposal and the target.
double resim_error(const SimulatorHandle& sim, const std::vector<float>& x_hat,
                   const std::vector<float>& y);

struct QueryOutcome {
    // Proposals in surrogate-ascending order; entries t = 0..T-1.
    std::vector<int> source_index;
    std::vector<double> surrogate_error;
    std::vector<double> true_error;
};

struct EvalReport {
    std::string problem;
    std::string model_id;
    int t_max = 1;
    std::vector<QueryOutcome> queries;
    // mean_resim[t-1] = mean over queries of min true error among the first t
    // proposals; non-increasing in t, and flat beyond the proposal count.
    std::vector<double> mean_resim;
};

// Scores the test queries with the mixture model; proposals beyond the
// manifold count clamp (a model with K manifolds offers at most K distinct
// proposals).
EvalReport evaluate_mmn(const MixtureManifoldModel& model, const Matrixf& test_y,
                        const SimulatorHandle& sim, int t_max);

EvalReport evaluate_na(const ForwardModel& fm, const ProblemSpec& problem, const Matrixf& test_y,
                       const SimulatorHandle& sim, int t_max, const GradientSearchSettings& gs,
                       std::uint64_t seed);

// Recomputes the summary curve from per-query rows; writers and consistency
// checks share this exact accumulation order.
std::vector<double> summarize(const std::vector<QueryOutcome>& queries, int t_max);

// report CSV: query_id,t,manifold_or_restart,surrogate_err,true_resim_err
void write_report_csv(const EvalReport& report, const std::string& path);
// summary CSV: T,mean_resim
void write_summary_csv(const EvalReport& report, const std::string& path);
EvalReport read_report_csv(const std::string& path);

struct TimingResult {
    double batched_s = 0.0;
    double sequential_s = 0.0;
    int n_queries = 0;
};

// Wall-clock for producing proposal sets for `queries`; a warm-up pass runs
// before the clock starts. Sequential timing is optional (it is the slow,
// per-query loop).
TimingResult time_mmn_inference(const MixtureManifoldModel& model, const Matrixf& queries,
                                bool include_sequential = true);
TimingResult time_na_inference(const ForwardModel& fm, const ProblemSpec& problem,
                               const Matrixf& queries, const GradientSearchSettings& gs,
                               std::uint64_t seed, bool include_sequential = false);

void write_timing_json(const TimingResult& t, const std::string& path);

// --- Ablations ----------------------------------------------------------------

struct ManifoldSweepPoint {
    int k;
    double mean_resim_t1;
    double normalized;  // relative to k = 1
};

// Nested-prefix sweep over the manifold count: evaluates the first k
// manifolds of a shared pool for k = 1..max_k, so the sweep isolates k.
std::vector<ManifoldSweepPoint> ablate_manifold_count(const MixtureManifoldModel& pool,
                                                      const Matrixf& test_y,
                                                      const SimulatorHandle& sim, int max_k);

struct AugmentationSweepPoint {
    double ratio;  // generated-samples / real-train-samples; 0 = the real-data reference
    std::size_t n_generated;
    double mean_resim_t1;
    double relative;  // relative to the real-data reference
};

struct AugmentationSweep {
    std::vector<AugmentationSweepPoint> points;
    double crossover_ratio;  // first ratio with relative < 1; NaN when none
};

// Trains a real-data single-manifold reference, then one single-manifold
// model per ratio on data generated by the shared frozen forward model.
AugmentationSweep ablate_augmentation(const ForwardModel& fm, const ProblemSpec& problem,
                                      const Dataset& real_data,
                                      const std::vector<double>& ratios,
                                      const NetworkSpec& backward_spec, double boundary_weight,
                                      const TrainSettings& ts, const SimulatorHandle& sim,
                                      std::uint64_t seed);

void write_manifold_sweep_csv(const std::vector<ManifoldSweepPoint>& points,
                              const std::string& path);
void write_augmentation_sweep_csv(const AugmentationSweep& sweep, const std::string& path);

}  // namespace mmn
