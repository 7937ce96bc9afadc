#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "mmn/tensor.hpp"

namespace mmn {

enum class PriorKind { Uniform, Gaussian, DiscreteUniformAffine };

// Sampling distribution for the control variables, one marginal per input
// dimension; dimensions are sampled independently.
struct Prior {
    PriorKind kind = PriorKind::Uniform;
    std::vector<double> lo, hi;          // uniform support per dimension
    std::vector<double> mean, variance;  // gaussian parameters per dimension
    // discrete-uniform-affine: integer v in [int_lo, int_hi], value = (v - shift) / scale
    long int_lo = 0, int_hi = 0;
    double shift = 0.0, scale = 1.0;
};

// Per-dimension box used by the boundary penalty. For uniform priors this is
// the support; for gaussian priors, the central 95% interval per dimension.
struct Bounds {
    std::vector<double> lo, hi;
};

enum class SimulatorBinding { BuiltinSine, BuiltinArm, External };

struct ProblemSpec {
    std::string name;
    int dim_x = 0;
    int dim_y = 0;
    Prior prior;
    Bounds bounds;
    SimulatorBinding binding = SimulatorBinding::External;
};

// The two analytically-defined benchmark problems plus the externally
// simulated shell problem (geometry sampling only; physics is delegated).
ProblemSpec sine_problem();
ProblemSpec arm_problem();
ProblemSpec shell_problem();
ProblemSpec problem_by_name(const std::string& name);

// y = sin(3 pi x1) + cos(3 pi x2)
double sine_forward(double x1, double x2);

// Planar three-joint arm: x = (base height, three joint angles),
// y = end-effector position, segment lengths (1/2, 1/2, 1).
std::array<double, 2> arm_forward(const std::array<double, 4>& x);

// n samples from the problem prior, deterministic in the seed.
Matrixf sample_prior(const ProblemSpec& problem, std::size_t n, std::uint64_t seed);

// Binding to a concrete forward process. For external problems, `command` is
// invoked as `<command> <request-csv> <response-csv>` inside `exchange_dir`.
struct SimulatorHandle {
    ProblemSpec problem;
    std::string command;
    std::string exchange_dir;
};

SimulatorHandle builtin_simulator(const ProblemSpec& problem);
SimulatorHandle external_simulator(const ProblemSpec& problem, std::string command,
                                   std::string exchange_dir);

// Evaluates the true forward process row-wise. Builtin problems compute in
// double and narrow to float; external problems go through the file exchange.
Matrixf simulate(const SimulatorHandle& handle, const Matrixf& x);

// File-exchange adapter, usable directly: writes the request CSV, runs the
// command, parses the response. Throws SimulatorError with the command's
// diagnostic output on any failure; no partial results.
Matrixf external_simulate(const SimulatorHandle& handle, const Matrixf& x);

}  // namespace mmn
