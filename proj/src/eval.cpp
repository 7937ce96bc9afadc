#include "mmn/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "mmn/errors.hpp"
#include "mmn/rng.hpp"

namespace mmn {

double resim_error(const SimulatorHandle& sim, const std::vector<float>& x_hat,
                   const std::vector<float>& y) {
    if (x_hat.size() != static_cast<std::size_t>(sim.problem.dim_x))
        throw ConfigError("resim_error: proposal dimension mismatch");
    if (y.size() != static_cast<std::size_t>(sim.problem.dim_y))
        throw ConfigError("resim_error: target dimension mismatch");
    const Matrixf xm = Matrixf::from_rows(1, x_hat.size(), x_hat);
    const Matrixf ym = simulate(sim, xm);
    double s = 0.0;
    for (std::size_t c = 0; c < ym.cols(); ++c) {
        const double d = static_cast<double>(ym(0, c)) - static_cast<double>(y[c]);
        s += d * d;
    }
    return s / static_cast<double>(ym.cols());
}

namespace {

// True errors for the first t_max proposals of each query. Proposals are
// re-simulated in one batch per proposal rank to keep external simulator
// invocations bounded.
std::vector<QueryOutcome> score_proposals(const std::vector<ProposalSet>& sets,
                                          const Matrixf& test_y, const SimulatorHandle& sim,
                                          int t_max) {
    const std::size_t q = sets.size();
    std::vector<QueryOutcome> outcomes(q);
    std::size_t max_props = 0;
    for (const auto& ps : sets) max_props = std::max(max_props, ps.proposals.size());
    const std::size_t t_avail = std::min<std::size_t>(t_max, max_props);

    const std::size_t dim_x = sim.problem.dim_x;
    for (std::size_t t = 0; t < t_avail; ++t) {
        // Gather rank-t proposals of the queries that have one.
        std::vector<std::size_t> who;
        Matrixf xs(0, 0);
        std::vector<float> flat;
        for (std::size_t r = 0; r < q; ++r) {
            if (t < sets[r].proposals.size()) {
                who.push_back(r);
                const auto& x = sets[r].proposals[t].x;
                flat.insert(flat.end(), x.begin(), x.end());
            }
        }
        if (who.empty()) break;
        xs = Matrixf::from_rows(who.size(), dim_x, std::move(flat));
        const Matrixf resim = simulate(sim, xs);
        for (std::size_t i = 0; i < who.size(); ++i) {
            const std::size_t r = who[i];
            double s = 0.0;
            for (std::size_t c = 0; c < resim.cols(); ++c) {
                const double d =
                    static_cast<double>(resim(i, c)) - static_cast<double>(test_y(r, c));
                s += d * d;
            }
            s /= static_cast<double>(resim.cols());
            outcomes[r].source_index.push_back(sets[r].proposals[t].source_index);
            outcomes[r].surrogate_error.push_back(sets[r].proposals[t].surrogate_error);
            outcomes[r].true_error.push_back(s);
        }
    }
    return outcomes;
}

}  // namespace

std::vector<double> summarize(const std::vector<QueryOutcome>& queries, int t_max) {
    std::vector<double> mean_resim(t_max, 0.0);
    for (int t = 1; t <= t_max; ++t) {
        double acc = 0.0;
        for (const auto& qo : queries) {
            // min over the first min(t, available) true errors
            const std::size_t avail = qo.true_error.size();
            const std::size_t upto = std::min<std::size_t>(t, avail);
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < upto; ++i) best = std::min(best, qo.true_error[i]);
            acc += best;
        }
        mean_resim[t - 1] = acc / static_cast<double>(queries.size());
    }
    return mean_resim;
}

EvalReport evaluate_mmn(const MixtureManifoldModel& model, const Matrixf& test_y,
                        const SimulatorHandle& sim, int t_max) {
    if (t_max < 1) throw ConfigError("evaluate: t_max must be at least 1");
    if (test_y.rows() == 0) throw ConfigError("evaluate: empty test split");
    EvalReport report;
    report.problem = model.problem;
    report.model_id = "mmn-k" + std::to_string(model.manifold_count());
    report.t_max = t_max;
    const auto sets = mmn_infer_batch(model, test_y);
    report.queries = score_proposals(sets, test_y, sim, t_max);
    report.mean_resim = summarize(report.queries, t_max);
    return report;
}

EvalReport evaluate_na(const ForwardModel& fm, const ProblemSpec& problem, const Matrixf& test_y,
                       const SimulatorHandle& sim, int t_max, const GradientSearchSettings& gs,
                       std::uint64_t seed) {
    if (t_max < 1) throw ConfigError("evaluate: t_max must be at least 1");
    if (test_y.rows() == 0) throw ConfigError("evaluate: empty test split");
    EvalReport report;
    report.problem = problem.name;
    report.model_id = "na-r" + std::to_string(gs.restarts) + "-s" + std::to_string(gs.steps);
    report.t_max = t_max;
    const auto sets = na_infer_batch(fm, problem, test_y, gs, seed);
    report.queries = score_proposals(sets, test_y, sim, t_max);
    report.mean_resim = summarize(report.queries, t_max);
    return report;
}

void write_report_csv(const EvalReport& report, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot write report: " + path);
    f << "query_id,t,manifold_or_restart,surrogate_err,true_resim_err\n";
    char buf[64];
    for (std::size_t q = 0; q < report.queries.size(); ++q) {
        const auto& qo = report.queries[q];
        for (std::size_t t = 0; t < qo.true_error.size(); ++t) {
            f << q << ',' << (t + 1) << ',' << qo.source_index[t] << ',';
            std::snprintf(buf, sizeof(buf), "%.17g", qo.surrogate_error[t]);
            f << buf << ',';
            std::snprintf(buf, sizeof(buf), "%.17g", qo.true_error[t]);
            f << buf << '\n';
        }
    }
}

void write_summary_csv(const EvalReport& report, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot write summary: " + path);
    f << "T,mean_resim\n";
    char buf[64];
    for (int t = 1; t <= report.t_max; ++t) {
        std::snprintf(buf, sizeof(buf), "%.17g", report.mean_resim[t - 1]);
        f << t << ',' << buf << '\n';
    }
}

EvalReport read_report_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open report: " + path);
    std::string line;
    if (!std::getline(f, line) ||
        line != "query_id,t,manifold_or_restart,surrogate_err,true_resim_err")
        throw IoError("report: bad header in " + path);
    EvalReport report;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::size_t q, t;
        int src;
        double surr, tru;
        std::getline(ss, cell, ',');
        q = std::stoul(cell);
        std::getline(ss, cell, ',');
        t = std::stoul(cell);
        std::getline(ss, cell, ',');
        src = std::stoi(cell);
        std::getline(ss, cell, ',');
        surr = std::stod(cell);
        std::getline(ss, cell, ',');
        tru = std::stod(cell);
        if (q >= report.queries.size()) report.queries.resize(q + 1);
        auto& qo = report.queries[q];
        if (t != qo.true_error.size() + 1)
            throw IoError("report: out-of-order t for query " + std::to_string(q));
        qo.source_index.push_back(src);
        qo.surrogate_error.push_back(surr);
        qo.true_error.push_back(tru);
    }
    return report;
}

// ---------------------------------------------------------------------------
// Timing
// ---------------------------------------------------------------------------

namespace {
double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}
}  // namespace

TimingResult time_mmn_inference(const MixtureManifoldModel& model, const Matrixf& queries,
                                bool include_sequential) {
    TimingResult result;
    result.n_queries = static_cast<int>(queries.rows());

    // Warm-up pass, excluded from the clock.
    const std::size_t warm = std::min<std::size_t>(8, queries.rows());
    (void)mmn_infer_batch(model, queries.slice_rows(0, warm));

    auto t0 = std::chrono::steady_clock::now();
    volatile double sink = 0.0;
    {
        const auto sets = mmn_infer_batch(model, queries);
        sink = sets.back().selected().surrogate_error;
    }
    result.batched_s = seconds_since(t0);

    if (include_sequential) {
        t0 = std::chrono::steady_clock::now();
        for (std::size_t r = 0; r < queries.rows(); ++r) {
            std::vector<float> y(queries.row(r), queries.row(r) + queries.cols());
            const auto ps = mmn_infer(model, y);
            sink = ps.selected().surrogate_error;
        }
        result.sequential_s = seconds_since(t0);
    }
    (void)sink;
    return result;
}

TimingResult time_na_inference(const ForwardModel& fm, const ProblemSpec& problem,
                               const Matrixf& queries, const GradientSearchSettings& gs,
                               std::uint64_t seed, bool include_sequential) {
    TimingResult result;
    result.n_queries = static_cast<int>(queries.rows());

    const std::size_t warm = std::min<std::size_t>(2, queries.rows());
    (void)na_infer_batch(fm, problem, queries.slice_rows(0, warm), gs, seed);

    auto t0 = std::chrono::steady_clock::now();
    volatile double sink = 0.0;
    {
        const auto sets = na_infer_batch(fm, problem, queries, gs, seed);
        sink = sets.back().selected().surrogate_error;
    }
    result.batched_s = seconds_since(t0);

    if (include_sequential) {
        t0 = std::chrono::steady_clock::now();
        for (std::size_t r = 0; r < queries.rows(); ++r) {
            std::vector<float> y(queries.row(r), queries.row(r) + queries.cols());
            const auto ps = na_infer(fm, problem, y, gs, derive_seed(seed, 0x200 + r));
            sink = ps.selected().surrogate_error;
        }
        result.sequential_s = seconds_since(t0);
    }
    (void)sink;
    return result;
}

void write_timing_json(const TimingResult& t, const std::string& path) {
    nlohmann::json j;
    j["batched_s"] = t.batched_s;
    j["sequential_s"] = t.sequential_s;
    j["n_queries"] = t.n_queries;
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot write timing json: " + path);
    f << j.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Ablations
// ---------------------------------------------------------------------------

std::vector<ManifoldSweepPoint> ablate_manifold_count(const MixtureManifoldModel& pool,
                                                      const Matrixf& test_y,
                                                      const SimulatorHandle& sim, int max_k) {
    if (max_k < 1 || max_k > pool.manifold_count())
        throw ConfigError("ablate_manifold_count: max_k exceeds the trained manifold pool");

    // One inference pass with the full pool; prefix models are then evaluated
    // by restricting the argmin to the first k manifolds.
    const auto sets = mmn_infer_batch(pool, test_y);
    const std::size_t q = test_y.rows();

    // surrogate score and true error per (query, manifold)
    std::vector<std::vector<double>> surr(q), tru(q);
    {
        // Re-simulate every manifold's proposal once.
        const auto outcomes = score_proposals(sets, test_y, sim, pool.manifold_count());
        for (std::size_t r = 0; r < q; ++r) {
            surr[r].resize(pool.manifold_count());
            tru[r].resize(pool.manifold_count());
            for (std::size_t t = 0; t < outcomes[r].true_error.size(); ++t) {
                const int m = outcomes[r].source_index[t];
                surr[r][m] = outcomes[r].surrogate_error[t];
                tru[r][m] = outcomes[r].true_error[t];
            }
        }
    }

    std::vector<ManifoldSweepPoint> points;
    double base = 0.0;
    for (int k = 1; k <= max_k; ++k) {
        double acc = 0.0;
        for (std::size_t r = 0; r < q; ++r) {
            int best_m = 0;
            for (int m = 1; m < k; ++m)
                if (surr[r][m] < surr[r][best_m]) best_m = m;
            acc += tru[r][best_m];
        }
        const double mean_t1 = acc / static_cast<double>(q);
        if (k == 1) base = mean_t1;
        points.push_back({k, mean_t1, mean_t1 / base});
    }
    return points;
}

AugmentationSweep ablate_augmentation(const ForwardModel& fm, const ProblemSpec& problem,
                                      const Dataset& real_data,
                                      const std::vector<double>& ratios,
                                      const NetworkSpec& backward_spec, double boundary_weight,
                                      const TrainSettings& ts, const SimulatorHandle& sim,
                                      std::uint64_t seed) {
    const Matrixf test_y = real_data.y_of(Split::Test);
    if (test_y.rows() == 0) throw ConfigError("ablate_augmentation: dataset has no test split");
    const std::size_t n_real = real_data.count(Split::Train);

    const auto eval_single = [&](const MixtureManifoldModel& m) {
        return evaluate_mmn(m, test_y, sim, 1).mean_resim[0];
    };

    // Reference: one backward model trained on the real data, same settings.
    const MixtureManifoldModel reference =
        train_mmn(fm, problem, 1, 0, backward_spec, boundary_weight, ts,
                  derive_seed(seed, 0x3F), &real_data);
    const double ref_value = eval_single(reference);

    AugmentationSweep sweep;
    sweep.points.push_back({0.0, n_real, ref_value, 1.0});
    sweep.crossover_ratio = std::numeric_limits<double>::quiet_NaN();

    std::vector<double> sorted_ratios = ratios;
    std::sort(sorted_ratios.begin(), sorted_ratios.end());
    for (std::size_t i = 0; i < sorted_ratios.size(); ++i) {
        const double ratio = sorted_ratios[i];
        if (ratio <= 0.0) throw ConfigError("ablate_augmentation: ratios must be positive");
        const auto n_gen = static_cast<std::size_t>(std::llround(ratio * n_real));
        const MixtureManifoldModel trained =
            train_mmn(fm, problem, 1, n_gen, backward_spec, boundary_weight, ts,
                      derive_seed(seed, 0x40 + i));
        const double value = eval_single(trained);
        const double relative = value / ref_value;
        if (std::isnan(sweep.crossover_ratio) && relative < 1.0) sweep.crossover_ratio = ratio;
        sweep.points.push_back({ratio, n_gen, value, relative});
    }
    return sweep;
}

void write_manifold_sweep_csv(const std::vector<ManifoldSweepPoint>& points,
                              const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot write sweep csv: " + path);
    f << "K,mean_resim_t1,normalized\n";
    char buf[64];
    for (const auto& p : points) {
        f << p.k << ',';
        std::snprintf(buf, sizeof(buf), "%.17g", p.mean_resim_t1);
        f << buf << ',';
        std::snprintf(buf, sizeof(buf), "%.17g", p.normalized);
        f << buf << '\n';
    }
}

void write_augmentation_sweep_csv(const AugmentationSweep& sweep, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot write sweep csv: " + path);
    nlohmann::json meta;
    if (std::isnan(sweep.crossover_ratio))
        meta["crossover_ratio"] = nullptr;
    else
        meta["crossover_ratio"] = sweep.crossover_ratio;
    f << "# " << meta.dump() << "\n";
    f << "ratio,n_generated,mean_resim_t1,relative\n";
    char buf[64];
    for (const auto& p : sweep.points) {
        std::snprintf(buf, sizeof(buf), "%.17g", p.ratio);
        f << buf << ',' << p.n_generated << ',';
        std::snprintf(buf, sizeof(buf), "%.17g", p.mean_resim_t1);
        f << buf << ',';
        std::snprintf(buf, sizeof(buf), "%.17g", p.relative);
        f << buf << '\n';
    }
}

}  // namespace mmn
