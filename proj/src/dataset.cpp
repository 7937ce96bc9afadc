#include "mmn/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mmn/errors.hpp"

namespace mmn {

const char* to_string(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Val: return "val";
        case Split::Test: return "test";
    }
    return "?";
}

const char* to_string(Provenance p) {
    return p == Provenance::Real ? "real" : "forward-generated";
}

std::size_t Dataset::count(Split s) const {
    std::size_t n = 0;
    for (Split v : split)
        if (v == s) ++n;
    return n;
}

std::vector<std::size_t> Dataset::indices(Split s) const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < split.size(); ++i)
        if (split[i] == s) idx.push_back(i);
    return idx;
}

namespace {

Dataset generate_impl(const ProblemSpec& problem, const SimulatorHandle& handle,
                      const DatasetSizes& sizes, std::uint64_t seed) {
    if (sizes.train == 0) throw ConfigError("generate_dataset: train split must be non-empty");
    Dataset ds;
    ds.problem = problem.name;
    ds.seed = seed;
    ds.provenance = Provenance::Real;
    ds.x = sample_prior(problem, sizes.total(), seed);
    ds.y = simulate(handle, ds.x);
    ds.split.assign(sizes.total(), Split::Train);
    for (std::size_t i = sizes.train; i < sizes.train + sizes.val; ++i) ds.split[i] = Split::Val;
    for (std::size_t i = sizes.train + sizes.val; i < sizes.total(); ++i)
        ds.split[i] = Split::Test;
    return ds;
}

}  // namespace

Dataset generate_dataset(const ProblemSpec& problem, const DatasetSizes& sizes,
                         std::uint64_t seed) {
    if (problem.binding == SimulatorBinding::External)
        throw ConfigError("generate_dataset: problem '" + problem.name +
                          "' needs an external simulator; use generate_dataset_external");
    return generate_impl(problem, builtin_simulator(problem), sizes, seed);
}

Dataset generate_dataset_external(const SimulatorHandle& handle, const DatasetSizes& sizes,
                                  std::uint64_t seed) {
    return generate_impl(handle.problem, handle, sizes, seed);
}

void save_dataset(const Dataset& ds, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot open dataset for writing: " + path);

    nlohmann::json meta;
    meta["problem"] = ds.problem;
    meta["dim_x"] = ds.x.cols();
    meta["dim_y"] = ds.y.cols();
    meta["rows"] = ds.rows();
    meta["provenance"] = to_string(ds.provenance);
    meta["seed"] = ds.seed;
    f << "# " << meta.dump() << "\n";

    for (std::size_t c = 0; c < ds.x.cols(); ++c) f << "x_" << c << ",";
    for (std::size_t c = 0; c < ds.y.cols(); ++c) f << "y_" << c << ",";
    f << "split\n";

    char buf[64];
    for (std::size_t r = 0; r < ds.rows(); ++r) {
        for (std::size_t c = 0; c < ds.x.cols(); ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g", static_cast<double>(ds.x(r, c)));
            f << buf << ',';
        }
        for (std::size_t c = 0; c < ds.y.cols(); ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g", static_cast<double>(ds.y(r, c)));
            f << buf << ',';
        }
        f << to_string(ds.split[r]) << '\n';
    }
    if (!f) throw IoError("dataset write failed: " + path);
}

Dataset load_dataset(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open dataset: " + path);

    std::string line;
    nlohmann::json meta;
    bool have_meta = false;
    // Metadata block: leading lines starting with '#'.
    while (std::getline(f, line)) {
        if (!line.empty() && line[0] == '#') {
            const auto body = line.substr(1);
            try {
                meta = nlohmann::json::parse(body);
                have_meta = true;
            } catch (const nlohmann::json::exception&) {
                throw IoError("dataset: malformed metadata line in " + path);
            }
        } else {
            break;
        }
    }
    if (!have_meta) throw IoError("dataset: missing header in " + path);

    // `line` now holds the column header.
    if (line.empty()) throw IoError("dataset: missing column header in " + path);

    std::size_t dim_x = 0, dim_y = 0, rows = 0;
    std::uint64_t seed = 0;
    std::string problem, provenance;
    try {
        dim_x = meta.at("dim_x").get<std::size_t>();
        dim_y = meta.at("dim_y").get<std::size_t>();
        rows = meta.at("rows").get<std::size_t>();
        problem = meta.at("problem").get<std::string>();
        provenance = meta.at("provenance").get<std::string>();
        seed = meta.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("dataset: incomplete metadata: ") + e.what());
    }

    Dataset ds;
    ds.problem = problem;
    ds.seed = seed;
    if (provenance == "real")
        ds.provenance = Provenance::Real;
    else if (provenance == "forward-generated")
        ds.provenance = Provenance::ForwardGenerated;
    else
        throw IoError("dataset: unknown provenance '" + provenance + "'");

    ds.x = Matrixf(rows, dim_x);
    ds.y = Matrixf(rows, dim_y);
    ds.split.reserve(rows);

    std::size_t row = 0;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        if (row >= rows)
            throw IoError("dataset: more data rows than declared in metadata (" + path + ")");
        std::stringstream ss(line);
        std::string cell;
        const std::size_t ncols = dim_x + dim_y;
        for (std::size_t c = 0; c < ncols; ++c) {
            if (!std::getline(ss, cell, ','))
                throw IoError("dataset row " + std::to_string(row + 1) + ": too few columns");
            char* end = nullptr;
            const double v = std::strtod(cell.c_str(), &end);
            if (end == cell.c_str() || *end != '\0')
                throw IoError("dataset row " + std::to_string(row + 1) + ": non-numeric cell '" +
                              cell + "'");
            if (std::isnan(v))
                throw IoError("dataset row " + std::to_string(row + 1) + ": NaN entry");
            if (c < dim_x)
                ds.x(row, c) = static_cast<float>(v);
            else
                ds.y(row, c - dim_x) = static_cast<float>(v);
        }
        if (!std::getline(ss, cell))
            throw IoError("dataset row " + std::to_string(row + 1) + ": missing split label");
        if (cell == "train")
            ds.split.push_back(Split::Train);
        else if (cell == "val")
            ds.split.push_back(Split::Val);
        else if (cell == "test")
            ds.split.push_back(Split::Test);
        else
            throw IoError("dataset row " + std::to_string(row + 1) + ": bad split label '" + cell +
                          "'");
        ++row;
    }
    if (row != rows)
        throw IoError("dataset: expected " + std::to_string(rows) + " rows, found " +
                      std::to_string(row));
    return ds;
}

}  // namespace mmn
