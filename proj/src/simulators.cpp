#include "mmn/simulators.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mmn/errors.hpp"
#include "mmn/rng.hpp"

namespace mmn {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kZ95 = 1.96;  // two-sided 95% normal quantile
}  // namespace

double sine_forward(double x1, double x2) {
    return std::sin(3.0 * kPi * x1) + std::cos(3.0 * kPi * x2);
}

std::array<double, 2> arm_forward(const std::array<double, 4>& x) {
    constexpr double l1 = 0.5, l2 = 0.5, l3 = 1.0;
    const double a1 = x[1];
    const double a2 = x[1] + x[2];
    const double a3 = x[1] + x[2] + x[3];
    return {l1 * std::sin(a1) + l2 * std::sin(a2) + l3 * std::sin(a3) + x[0],
            l1 * std::cos(a1) + l2 * std::cos(a2) + l3 * std::cos(a3)};
}

ProblemSpec sine_problem() {
    ProblemSpec p;
    p.name = "sine";
    p.dim_x = 2;
    p.dim_y = 1;
    p.prior.kind = PriorKind::Uniform;
    p.prior.lo = {-1.0, -1.0};
    p.prior.hi = {1.0, 1.0};
    p.bounds.lo = p.prior.lo;  // uniform prior: bounds equal the support
    p.bounds.hi = p.prior.hi;
    p.binding = SimulatorBinding::BuiltinSine;
    return p;
}

ProblemSpec arm_problem() {
    ProblemSpec p;
    p.name = "arm";
    p.dim_x = 4;
    p.dim_y = 2;
    p.prior.kind = PriorKind::Gaussian;
    p.prior.mean = {0.0, 0.0, 0.0, 0.0};
    p.prior.variance = {1.0 / 16.0, 0.25, 0.25, 0.25};
    for (double var : p.prior.variance) {
        const double half = kZ95 * std::sqrt(var);
        p.bounds.lo.push_back(-half);
        p.bounds.hi.push_back(half);
    }
    p.binding = SimulatorBinding::BuiltinArm;
    return p;
}

ProblemSpec shell_problem() {
    ProblemSpec p;
    p.name = "shell";
    p.dim_x = 8;
    p.dim_y = 201;
    p.prior.kind = PriorKind::DiscreteUniformAffine;
    p.prior.int_lo = 30;
    p.prior.int_hi = 70;
    p.prior.shift = 50.0;
    p.prior.scale = 20.0;
    for (int d = 0; d < p.dim_x; ++d) {
        p.bounds.lo.push_back((30.0 - 50.0) / 20.0);
        p.bounds.hi.push_back((70.0 - 50.0) / 20.0);
    }
    p.binding = SimulatorBinding::External;
    return p;
}

ProblemSpec problem_by_name(const std::string& name) {
    if (name == "sine") return sine_problem();
    if (name == "arm") return arm_problem();
    if (name == "shell") return shell_problem();
    throw ConfigError("unknown problem: " + name);
}

Matrixf sample_prior(const ProblemSpec& problem, std::size_t n, std::uint64_t seed) {
    Matrixf x(n, problem.dim_x);
    Rng rng(derive_seed(seed, 0x5A));
    const int d = problem.dim_x;
    switch (problem.prior.kind) {
        case PriorKind::Uniform:
            if (problem.prior.lo.size() != static_cast<std::size_t>(d))
                throw ConfigError("prior: uniform bounds do not match dim_x");
            for (std::size_t r = 0; r < n; ++r)
                for (int c = 0; c < d; ++c)
                    x(r, c) = static_cast<float>(
                        rng.uniform(problem.prior.lo[c], problem.prior.hi[c]));
            break;
        case PriorKind::Gaussian:
            if (problem.prior.variance.size() != static_cast<std::size_t>(d))
                throw ConfigError("prior: gaussian parameters do not match dim_x");
            for (std::size_t r = 0; r < n; ++r)
                for (int c = 0; c < d; ++c)
                    x(r, c) = static_cast<float>(problem.prior.mean[c] +
                                                 std::sqrt(problem.prior.variance[c]) *
                                                     rng.gaussian());
            break;
        case PriorKind::DiscreteUniformAffine:
            for (std::size_t r = 0; r < n; ++r)
                for (int c = 0; c < d; ++c) {
                    const double v = static_cast<double>(
                        rng.uniform_int(problem.prior.int_lo, problem.prior.int_hi));
                    x(r, c) = static_cast<float>((v - problem.prior.shift) / problem.prior.scale);
                }
            break;
        default:
            throw ConfigError("unknown prior kind");
    }
    return x;
}

SimulatorHandle builtin_simulator(const ProblemSpec& problem) {
    if (problem.binding == SimulatorBinding::External)
        throw ConfigError("problem '" + problem.name + "' has no builtin simulator");
    return {problem, "", ""};
}

SimulatorHandle external_simulator(const ProblemSpec& problem, std::string command,
                                   std::string exchange_dir) {
    SimulatorHandle h{problem, std::move(command), std::move(exchange_dir)};
    if (h.command.empty()) throw ConfigError("external simulator requires a command");
    return h;
}

Matrixf simulate(const SimulatorHandle& handle, const Matrixf& x) {
    const auto& p = handle.problem;
    if (x.cols() != static_cast<std::size_t>(p.dim_x))
        throw ConfigError("simulate: input has " + std::to_string(x.cols()) +
                          " columns, expected " + std::to_string(p.dim_x));
    switch (p.binding) {
        case SimulatorBinding::BuiltinSine: {
            Matrixf y(x.rows(), 1);
            for (std::size_t r = 0; r < x.rows(); ++r)
                y(r, 0) = static_cast<float>(sine_forward(x(r, 0), x(r, 1)));
            return y;
        }
        case SimulatorBinding::BuiltinArm: {
            Matrixf y(x.rows(), 2);
            for (std::size_t r = 0; r < x.rows(); ++r) {
                const auto out = arm_forward({x(r, 0), x(r, 1), x(r, 2), x(r, 3)});
                y(r, 0) = static_cast<float>(out[0]);
                y(r, 1) = static_cast<float>(out[1]);
            }
            return y;
        }
        case SimulatorBinding::External:
            return external_simulate(handle, x);
    }
    throw ConfigError("simulate: unknown binding");
}

namespace {

std::string read_file_or_empty(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) return "";
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

}  // namespace

Matrixf external_simulate(const SimulatorHandle& handle, const Matrixf& x) {
    const auto& p = handle.problem;
    if (handle.command.empty())
        throw ConfigError("external_simulate: no command configured for '" + p.name + "'");
    if (x.cols() != static_cast<std::size_t>(p.dim_x))
        throw ConfigError("external_simulate: input column count mismatch");

    namespace fs = std::filesystem;
    const fs::path dir = handle.exchange_dir.empty() ? fs::path(".") : fs::path(handle.exchange_dir);
    fs::create_directories(dir);
    const std::string request = (dir / "request.csv").string();
    const std::string response = (dir / "response.csv").string();
    const std::string errlog = (dir / "stderr.log").string();
    std::error_code ec;
    fs::remove(response, ec);

    {
        std::ofstream req(request, std::ios::trunc);
        if (!req) throw SimulatorError("cannot write request file: " + request);
        char buf[64];
        for (std::size_t r = 0; r < x.rows(); ++r) {
            for (std::size_t c = 0; c < x.cols(); ++c) {
                std::snprintf(buf, sizeof(buf), "%.17g", static_cast<double>(x(r, c)));
                if (c) req << ',';
                req << buf;
            }
            req << '\n';
        }
    }

    const std::string cmdline = handle.command + " " + request + " " + response + " 2> " + errlog;
    const int rc = std::system(cmdline.c_str());
    if (rc != 0) {
        throw SimulatorError("external simulator '" + handle.command + "' failed (status " +
                             std::to_string(rc) + "): " + read_file_or_empty(errlog));
    }

    std::ifstream resp(response);
    if (!resp)
        throw SimulatorError("external simulator produced no response file: " + response +
                             "; stderr: " + read_file_or_empty(errlog));

    Matrixf y(x.rows(), p.dim_y);
    std::string line;
    std::size_t row = 0;
    while (std::getline(resp, line)) {
        if (line.empty()) continue;
        if (row >= x.rows())
            throw SimulatorError("external simulator response has more rows than the request");
        std::stringstream ss(line);
        std::string cell;
        std::size_t col = 0;
        while (std::getline(ss, cell, ',')) {
            if (col >= static_cast<std::size_t>(p.dim_y))
                throw SimulatorError("external simulator response row " + std::to_string(row + 1) +
                                     " has too many columns");
            char* end = nullptr;
            const double v = std::strtod(cell.c_str(), &end);
            if (end == cell.c_str() || !std::isfinite(v))
                throw SimulatorError("external simulator response row " + std::to_string(row + 1) +
                                     ": bad value '" + cell + "'");
            y(row, col) = static_cast<float>(v);
            ++col;
        }
        if (col != static_cast<std::size_t>(p.dim_y))
            throw SimulatorError("external simulator response row " + std::to_string(row + 1) +
                                 " has " + std::to_string(col) + " columns, expected " +
                                 std::to_string(p.dim_y));
        ++row;
    }
    if (row != x.rows())
        throw SimulatorError("external simulator response has " + std::to_string(row) +
                             " rows, expected " + std::to_string(x.rows()));
    return y;
}

}  // namespace mmn
