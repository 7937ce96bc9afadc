#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mmn/dataset.hpp"
#include "mmn/network.hpp"
#include "mmn/simulators.hpp"

namespace mmn {

struct TrainSettings {
    int epochs = 500;
    int batch_size = 1024;
    double lr = 1e-3;
    int plateau_patience = 10;
    double plateau_factor = 0.5;
    double plateau_min_lr = 1e-6;
    double plateau_threshold = 1e-6;
};

struct EpochStat {
    int epoch;
    double train_loss;
    double val_loss;
    double lr;
};

struct TrainRecord {
    double final_train_loss = 0.0;
    double best_val_loss = 0.0;
    int epochs = 0;
    std::vector<EpochStat> curve;
};

// Surrogate of the true forward process. Frozen after training: parameter
// bytes never change across any subsequent operation.
struct ForwardModel {
    Network<float> net;  // dim_x -> dim_y, inference mode
    TrainRecord record;
};

struct BackwardModel {
    Network<float> net;  // dim_y -> dim_x, inference mode
    int manifold_index = 0;
    double boundary_weight = 0.0;
    Provenance provenance = Provenance::ForwardGenerated;
    std::size_t training_samples = 0;
    std::uint64_t seed = 0;
    TrainRecord record;
};

struct MixtureManifoldModel {
    std::string problem;
    ForwardModel forward;
    std::vector<BackwardModel> backwards;
    Bounds bounds;
    double boundary_weight = 0.0;
    std::size_t n_augmented = 0;
    std::uint64_t base_seed = 0;

    int manifold_count() const { return static_cast<int>(backwards.size()); }
};

struct Proposal {
    std::vector<float> x;
    double surrogate_error;  // mean over output dims of (f_hat(x) - y)^2
    int source_index;        // manifold index, or restart index for the gradient baseline
};

// Proposals for one query, ascending by surrogate error; ties broken toward
// the lower source index. selected() is always the front.
struct ProposalSet {
    std::vector<Proposal> proposals;
    const Proposal& selected() const { return proposals.front(); }
};

// --- Forward model -----------------------------------------------------------

ForwardModel train_forward(const Dataset& ds, const NetworkSpec& spec, const TrainSettings& ts,
                           std::uint64_t seed);

// --- Boundary penalty --------------------------------------------------------

// Hinge distance to the per-dimension box, summed over dimensions.
// Subgradient is -1/0/+1 per coordinate (0 at the kinks).
double boundary_loss(const std::vector<double>& x, const Bounds& bounds,
                     std::vector<double>* grad = nullptr);

// Equivalent center/range form, ReLU(|x - mu| - R/2) per coordinate.
double boundary_loss_relu_form(const std::vector<double>& x, const Bounds& bounds);

// --- Data augmentation through the surrogate ---------------------------------

// Draws n samples from the problem prior and labels them with the frozen
// surrogate. 90% train / 10% val, no test rows.
Dataset generate_augmented(const ForwardModel& fm, const ProblemSpec& problem, std::size_t n,
                           std::uint64_t seed);

// --- Backward (inverse) models -----------------------------------------------

// Trains an inverse network by descending the re-simulation loss through the
// frozen surrogate plus the weighted boundary penalty. Only y values are
// consumed; x labels are never used.
BackwardModel train_backward(const ForwardModel& fm, const Matrixf& y_train,
                             const Matrixf& y_val, const NetworkSpec& spec,
                             double boundary_weight, const Bounds& bounds,
                             const TrainSettings& ts, std::uint64_t seed);

// Trains K independent inverse models against one shared frozen surrogate.
// Manifold k uses seed^k for both its fresh augmented sample and its training
// run. When `real_data` is given, all manifolds train on its y values instead
// of augmented samples (single manifold = the classic tandem baseline).
MixtureManifoldModel train_mmn(const ForwardModel& fm, const ProblemSpec& problem, int k,
                               std::size_t n_augmented, const NetworkSpec& backward_spec,
                               double boundary_weight, const TrainSettings& ts,
                               std::uint64_t seed, const Dataset* real_data = nullptr);

// --- Inference ----------------------------------------------------------------

// One pass through each inverse model, scored by the shared surrogate; the
// proposal whose surrogate output is closest to y wins. No iterative
// refinement.
ProposalSet mmn_infer(const MixtureManifoldModel& model, const std::vector<float>& y);
std::vector<ProposalSet> mmn_infer_batch(const MixtureManifoldModel& model, const Matrixf& ys);

// Gradient-descent baseline: optimizes candidate inputs directly through the
// frozen surrogate.
struct GradientSearchSettings {
    int restarts = 50;
    int steps = 300;
    double lr = 0.01;
    double boundary_weight = 0.1;
};

ProposalSet na_infer(const ForwardModel& fm, const ProblemSpec& problem,
                     const std::vector<float>& y, const GradientSearchSettings& gs,
                     std::uint64_t seed);
std::vector<ProposalSet> na_infer_batch(const ForwardModel& fm, const ProblemSpec& problem,
                                        const Matrixf& ys, const GradientSearchSettings& gs,
                                        std::uint64_t seed);

// --- Bundle persistence --------------------------------------------------------

// Directory layout: forward.ckpt, backward_<k>.ckpt, model.json.
void save_bundle(const MixtureManifoldModel& model, const std::string& dir);
MixtureManifoldModel load_bundle(const std::string& dir);

}  // namespace mmn
