#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mmn/simulators.hpp"
#include "mmn/tensor.hpp"

namespace mmn {

enum class Split : std::uint8_t { Train, Val, Test };
enum class Provenance : std::uint8_t { Real, ForwardGenerated };

const char* to_string(Split s);
const char* to_string(Provenance p);

struct DatasetSizes {
    std::size_t train = 0;
    std::size_t val = 0;
    std::size_t test = 0;
    std::size_t total() const { return train + val + test; }
};

// Paired (x, y) samples with per-row split labels. Immutable once built.
struct Dataset {
    std::string problem;
    Matrixf x;
    Matrixf y;
    std::vector<Split> split;
    Provenance provenance = Provenance::Real;
    std::uint64_t seed = 0;

    std::size_t rows() const { return x.rows(); }
    std::size_t count(Split s) const;
    std::vector<std::size_t> indices(Split s) const;
    Matrixf x_of(Split s) const { return x.take_rows(indices(s)); }
    Matrixf y_of(Split s) const { return y.take_rows(indices(s)); }
};

// Samples X from the prior, evaluates the builtin simulator, and assigns
// splits as contiguous blocks (train, then val, then test) in sampling order.
Dataset generate_dataset(const ProblemSpec& problem, const DatasetSizes& sizes,
                         std::uint64_t seed);

// External-simulator variant for problems without builtin physics.
Dataset generate_dataset_external(const SimulatorHandle& handle, const DatasetSizes& sizes,
                                  std::uint64_t seed);

// CSV with '#'-prefixed JSON metadata lines, then a column header
// `x_0..x_{D-1},y_0..y_{M-1},split`, then rows at 17 significant digits.
void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

}  // namespace mmn
