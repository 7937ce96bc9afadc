#include "mmn/inverse.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "mmn/checkpoint.hpp"
#include "mmn/errors.hpp"
#include "mmn/optim.hpp"
#include "mmn/rng.hpp"

namespace mmn {

namespace {

// Shared epoch scaffolding: shuffled mini-batches, per-epoch validation,
// plateau decay, best-validation snapshot.
template <typename StepFn, typename ValFn>
TrainRecord run_training(Network<float>& net, std::size_t n_train, const TrainSettings& ts,
                         std::uint64_t seed, StepFn&& train_step, ValFn&& val_loss_fn) {
    if (n_train == 0) throw ConfigError("training requires a non-empty train split");
    if (ts.epochs <= 0 || ts.batch_size <= 0)
        throw ConfigError("training settings: epochs and batch size must be positive");

    AdamOptimizer<float> opt(net.trainable_size(),
                             AdamConfig<float>{static_cast<float>(ts.lr)});
    PlateauScheduler sched(ts.lr, ts.plateau_patience, ts.plateau_factor, ts.plateau_min_lr,
                           ts.plateau_threshold);

    TrainRecord record;
    Network<float> best = net;
    double best_val = std::numeric_limits<double>::infinity();

    std::vector<std::size_t> order(n_train);
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (int epoch = 0; epoch < ts.epochs; ++epoch) {
        Rng shuffle_rng(derive_seed(seed, 0x1000 + static_cast<std::uint64_t>(epoch)));
        shuffle_rng.shuffle(order);

        net.set_mode(Mode::Training);
        double loss_sum = 0.0;
        std::size_t seen = 0;
        for (std::size_t start = 0; start < n_train; start += ts.batch_size) {
            const std::size_t count = std::min<std::size_t>(ts.batch_size, n_train - start);
            const std::vector<std::size_t> batch(order.begin() + start,
                                                 order.begin() + start + count);
            double loss;
            try {
                loss = train_step(batch, opt);
            } catch (const TrainingError& e) {
                throw TrainingError("epoch " + std::to_string(epoch) + ": " + e.what());
            }
            if (!std::isfinite(loss))
                throw TrainingError("training diverged at epoch " + std::to_string(epoch));
            loss_sum += loss * static_cast<double>(count);
            seen += count;
        }
        const double train_loss = loss_sum / static_cast<double>(seen);

        net.set_mode(Mode::Inference);
        const double val_loss = val_loss_fn();
        if (!std::isfinite(val_loss))
            throw TrainingError("validation diverged at epoch " + std::to_string(epoch));
        opt.set_learning_rate(static_cast<float>(sched.step(val_loss)));

        if (val_loss < best_val) {
            best_val = val_loss;
            best = net;
        }
        record.curve.push_back({epoch, train_loss, val_loss, sched.lr()});
        record.final_train_loss = train_loss;
    }

    net = best;
    net.set_mode(Mode::Inference);
    record.best_val_loss = best_val;
    record.epochs = ts.epochs;
    return record;
}

double mse(const Matrixf& a, const Matrixf& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a.data()[i]) - static_cast<double>(b.data()[i]);
        s += d * d;
    }
    return s / static_cast<double>(a.size());
}

// Mean over rows of the per-row dimension-sum hinge; optional subgradient
// (already scaled by 1/rows).
double boundary_loss_batch(const Matrixf& x, const Bounds& bounds, Matrixf* grad) {
    const std::size_t rows = x.rows(), cols = x.cols();
    double total = 0.0;
    if (grad) grad->fill(0.0f);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            const double v = x(r, c);
            if (v > bounds.hi[c]) {
                total += v - bounds.hi[c];
                if (grad) (*grad)(r, c) = 1.0f / static_cast<float>(rows);
            } else if (v < bounds.lo[c]) {
                total += bounds.lo[c] - v;
                if (grad) (*grad)(r, c) = -1.0f / static_cast<float>(rows);
            }
        }
    }
    return total / static_cast<double>(rows);
}

}  // namespace

// ---------------------------------------------------------------------------
// Forward model
// ---------------------------------------------------------------------------

ForwardModel train_forward(const Dataset& ds, const NetworkSpec& spec, const TrainSettings& ts,
                           std::uint64_t seed) {
    const Matrixf x_train = ds.x_of(Split::Train);
    const Matrixf y_train = ds.y_of(Split::Train);
    const Matrixf x_val = ds.x_of(Split::Val);
    const Matrixf y_val = ds.y_of(Split::Val);
    if (x_val.rows() == 0) throw ConfigError("train_forward: dataset has no validation split");

    ForwardModel fm;
    fm.net = Network<float>(spec, derive_seed(seed, 0x01));
    Gradients<float> grads = fm.net.make_gradients();

    fm.record = run_training(
        fm.net, x_train.rows(), ts, seed,
        [&](const std::vector<std::size_t>& batch, AdamOptimizer<float>& opt) {
            const Matrixf xb = x_train.take_rows(batch);
            const Matrixf yb = y_train.take_rows(batch);
            const double loss = fm.net.param_gradients(xb, yb, grads);
            opt.step(fm.net.trainable_tensors(), fm.net.gradient_tensors(grads));
            return loss;
        },
        [&]() { return mse(fm.net.forward_inference(x_val), y_val); });
    return fm;
}

// ---------------------------------------------------------------------------
// Boundary penalty
// ---------------------------------------------------------------------------

double boundary_loss(const std::vector<double>& x, const Bounds& bounds,
                     std::vector<double>* grad) {
    if (x.size() != bounds.lo.size())
        throw ConfigError("boundary_loss: dimension mismatch with bounds");
    if (grad) grad->assign(x.size(), 0.0);
    double total = 0.0;
    for (std::size_t c = 0; c < x.size(); ++c) {
        if (bounds.lo[c] >= bounds.hi[c])
            throw ConfigError("boundary_loss: bounds must satisfy lo < hi");
        if (x[c] > bounds.hi[c]) {
            total += x[c] - bounds.hi[c];
            if (grad) (*grad)[c] = 1.0;
        } else if (x[c] < bounds.lo[c]) {
            total += bounds.lo[c] - x[c];
            if (grad) (*grad)[c] = -1.0;
        }
    }
    return total;
}

double boundary_loss_relu_form(const std::vector<double>& x, const Bounds& bounds) {
    double total = 0.0;
    for (std::size_t c = 0; c < x.size(); ++c) {
        const double mu = 0.5 * (bounds.lo[c] + bounds.hi[c]);
        const double range = bounds.hi[c] - bounds.lo[c];
        total += std::max(0.0, std::abs(x[c] - mu) - 0.5 * range);
    }
    return total;
}

// ---------------------------------------------------------------------------
// Augmentation
// ---------------------------------------------------------------------------

Dataset generate_augmented(const ForwardModel& fm, const ProblemSpec& problem, std::size_t n,
                           std::uint64_t seed) {
    if (n == 0) throw ConfigError("generate_augmented: sample count must be positive");
    Dataset ds;
    ds.problem = problem.name;
    ds.seed = seed;
    ds.provenance = Provenance::ForwardGenerated;
    ds.x = sample_prior(problem, n, seed);
    ds.y = fm.net.forward_inference(ds.x);
    const std::size_t n_val = n / 10;
    ds.split.assign(n, Split::Train);
    for (std::size_t i = n - n_val; i < n; ++i) ds.split[i] = Split::Val;
    return ds;
}

// ---------------------------------------------------------------------------
// Backward training
// ---------------------------------------------------------------------------

namespace {

double tandem_loss(const ForwardModel& fm, Network<float>& backward, const Matrixf& ys,
                   double boundary_weight, const Bounds& bounds) {
    const Matrixf x_hat = backward.forward_inference(ys);
    const Matrixf y_hat = fm.net.forward_inference(x_hat);
    return mse(y_hat, ys) + boundary_weight * boundary_loss_batch(x_hat, bounds, nullptr);
}

}  // namespace

BackwardModel train_backward(const ForwardModel& fm, const Matrixf& y_train,
                             const Matrixf& y_val, const NetworkSpec& spec,
                             double boundary_weight, const Bounds& bounds,
                             const TrainSettings& ts, std::uint64_t seed) {
    if (y_train.rows() == 0 || y_val.rows() == 0)
        throw ConfigError("train_backward: empty train or validation targets");
    if (spec.output_dim != static_cast<int>(bounds.lo.size()))
        throw ConfigError("train_backward: bounds dimension does not match backward output");

    BackwardModel bm;
    bm.net = Network<float>(spec, derive_seed(seed, 0x02));
    bm.boundary_weight = boundary_weight;
    bm.seed = seed;
    bm.training_samples = y_train.rows();
    Gradients<float> grads = bm.net.make_gradients();

    bm.record = run_training(
        bm.net, y_train.rows(), ts, seed,
        [&](const std::vector<std::size_t>& batch, AdamOptimizer<float>& opt) {
            const Matrixf yb = y_train.take_rows(batch);

            ForwardCache<float> bwd_cache;
            bm.net.forward_train_cached(yb, bwd_cache);
            const Matrixf& x_hat = bwd_cache.output;

            ForwardCache<float> fwd_cache;
            fm.net.forward_inference_cached(x_hat, fwd_cache);
            const Matrixf& y_hat = fwd_cache.output;

            // d/dy_hat of the mean squared re-simulation error.
            Matrixf grad_yhat(y_hat.rows(), y_hat.cols());
            double loss = 0.0;
            const float scale = 2.0f / static_cast<float>(y_hat.size());
            for (std::size_t i = 0; i < y_hat.size(); ++i) {
                const double d =
                    static_cast<double>(y_hat.data()[i]) - static_cast<double>(yb.data()[i]);
                loss += d * d;
                grad_yhat.data()[i] = scale * static_cast<float>(d);
            }
            loss /= static_cast<double>(y_hat.size());

            // Through the frozen surrogate into the proposals...
            Matrixf grad_xhat = fm.net.backward_input(fwd_cache, grad_yhat);

            // ...plus the boundary penalty, straight on the proposals.
            Matrixf bnd_grad(x_hat.rows(), x_hat.cols());
            const double bnd = boundary_loss_batch(x_hat, bounds, &bnd_grad);
            loss += boundary_weight * bnd;
            const float bw = static_cast<float>(boundary_weight);
            for (std::size_t i = 0; i < grad_xhat.size(); ++i)
                grad_xhat.data()[i] += bw * bnd_grad.data()[i];

            bm.net.backward_params(bwd_cache, grad_xhat, grads);
            opt.step(bm.net.trainable_tensors(), bm.net.gradient_tensors(grads));
            return loss;
        },
        [&]() { return tandem_loss(fm, bm.net, y_val, boundary_weight, bounds); });
    return bm;
}

MixtureManifoldModel train_mmn(const ForwardModel& fm, const ProblemSpec& problem, int k,
                               std::size_t n_augmented, const NetworkSpec& backward_spec,
                               double boundary_weight, const TrainSettings& ts,
                               std::uint64_t seed, const Dataset* real_data) {
    if (k < 1) throw ConfigError("train_mmn: manifold count must be at least 1");

    MixtureManifoldModel model;
    model.problem = problem.name;
    model.forward = fm;
    model.bounds = problem.bounds;
    model.boundary_weight = boundary_weight;
    model.n_augmented = real_data ? 0 : n_augmented;
    model.base_seed = seed;

    for (int m = 0; m < k; ++m) {
        const std::uint64_t manifold_seed = seed ^ static_cast<std::uint64_t>(m);
        BackwardModel bm;
        try {
            if (real_data) {
                bm = train_backward(fm, real_data->y_of(Split::Train),
                                    real_data->y_of(Split::Val), backward_spec, boundary_weight,
                                    problem.bounds, ts, manifold_seed);
                bm.provenance = Provenance::Real;
            } else {
                const Dataset aug = generate_augmented(fm, problem, n_augmented, manifold_seed);
                bm = train_backward(fm, aug.y_of(Split::Train), aug.y_of(Split::Val),
                                    backward_spec, boundary_weight, problem.bounds, ts,
                                    manifold_seed);
                bm.provenance = Provenance::ForwardGenerated;
            }
        } catch (const TrainingError& e) {
            throw TrainingError("manifold " + std::to_string(m) + ": " + e.what());
        }
        bm.manifold_index = m;
        model.backwards.push_back(std::move(bm));
    }
    return model;
}

// ---------------------------------------------------------------------------
// Inference
// ---------------------------------------------------------------------------

std::vector<ProposalSet> mmn_infer_batch(const MixtureManifoldModel& model, const Matrixf& ys) {
    if (model.backwards.empty()) throw ConfigError("mmn_infer: model has no backward models");
    const std::size_t q = ys.rows();
    const int dim_y = model.forward.net.spec().output_dim;
    if (ys.cols() != static_cast<std::size_t>(dim_y))
        throw ConfigError("mmn_infer: query dimension mismatch");

    const int k = model.manifold_count();
    std::vector<Matrixf> proposals(k);
    std::vector<std::vector<double>> scores(k);
    for (int m = 0; m < k; ++m) {
        proposals[m] = model.backwards[m].net.forward_inference(ys);
        const Matrixf resim = model.forward.net.forward_inference(proposals[m]);
        scores[m].resize(q);
        for (std::size_t r = 0; r < q; ++r) {
            double s = 0.0;
            for (std::size_t c = 0; c < resim.cols(); ++c) {
                const double d =
                    static_cast<double>(resim(r, c)) - static_cast<double>(ys(r, c));
                s += d * d;
            }
            scores[m][r] = s / static_cast<double>(resim.cols());
        }
    }

    std::vector<ProposalSet> out(q);
    const std::size_t dim_x = proposals[0].cols();
    for (std::size_t r = 0; r < q; ++r) {
        auto& ps = out[r];
        ps.proposals.reserve(k);
        for (int m = 0; m < k; ++m) {
            const float* row = proposals[m].row(r);
            ps.proposals.push_back(
                {std::vector<float>(row, row + dim_x), scores[m][r], m});
        }
        std::stable_sort(ps.proposals.begin(), ps.proposals.end(),
                         [](const Proposal& a, const Proposal& b) {
                             return a.surrogate_error < b.surrogate_error;
                         });
    }
    return out;
}

ProposalSet mmn_infer(const MixtureManifoldModel& model, const std::vector<float>& y) {
    const Matrixf ys = Matrixf::from_rows(1, y.size(), y);
    return mmn_infer_batch(model, ys)[0];
}

namespace {

// Core of the gradient-descent baseline: per-row independent Adam descent of
// surrogate error plus boundary penalty. `targets` holds one goal row per
// candidate row. Rows are fully independent, so callers may chunk freely.
Matrixf gradient_search(const ForwardModel& fm, const Bounds& bounds, Matrixf candidates,
                        const Matrixf& targets, const GradientSearchSettings& gs) {
    const std::size_t rows = candidates.rows();
    const std::size_t dim_x = candidates.cols();
    const std::size_t dim_y = targets.cols();

    AdamOptimizer<float> opt(rows * dim_x, AdamConfig<float>{static_cast<float>(gs.lr)});
    Matrixf grad(rows, dim_x);
    const float bw = static_cast<float>(gs.boundary_weight);

    for (int step = 0; step < gs.steps; ++step) {
        ForwardCache<float> cache;
        fm.net.forward_inference_cached(candidates, cache);

        Matrixf grad_y(rows, dim_y);
        const float scale = 2.0f / static_cast<float>(dim_y);
        for (std::size_t i = 0; i < grad_y.size(); ++i)
            grad_y.data()[i] = scale * (cache.output.data()[i] - targets.data()[i]);

        grad = fm.net.backward_input(cache, grad_y);

        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < dim_x; ++c) {
                const double v = candidates(r, c);
                if (v > bounds.hi[c])
                    grad(r, c) += bw;
                else if (v < bounds.lo[c])
                    grad(r, c) -= bw;
            }
        }
        opt.step_flat(candidates.data(), grad.data(), rows * dim_x);
    }
    return candidates;
}

ProposalSet collect_proposals(const ForwardModel& fm, const Matrixf& finals,
                              const std::vector<float>& y) {
    const Matrixf resim = fm.net.forward_inference(finals);
    ProposalSet ps;
    for (std::size_t r = 0; r < finals.rows(); ++r) {
        double s = 0.0;
        bool finite = true;
        for (std::size_t c = 0; c < finals.cols(); ++c)
            finite = finite && std::isfinite(static_cast<double>(finals(r, c)));
        for (std::size_t c = 0; c < resim.cols(); ++c) {
            const double d = static_cast<double>(resim(r, c)) - static_cast<double>(y[c]);
            s += d * d;
        }
        s /= static_cast<double>(resim.cols());
        if (!finite || !std::isfinite(s)) {
            std::cerr << "warning: dropping diverged candidate " << r << "\n";
            continue;
        }
        const float* row = finals.row(r);
        ps.proposals.push_back({std::vector<float>(row, row + finals.cols()), s,
                                static_cast<int>(r)});
    }
    if (ps.proposals.empty())
        throw TrainingError("gradient search: every candidate diverged");
    std::stable_sort(ps.proposals.begin(), ps.proposals.end(),
                     [](const Proposal& a, const Proposal& b) {
                         return a.surrogate_error < b.surrogate_error;
                     });
    return ps;
}

}  // namespace

ProposalSet na_infer(const ForwardModel& fm, const ProblemSpec& problem,
                     const std::vector<float>& y, const GradientSearchSettings& gs,
                     std::uint64_t seed) {
    if (gs.restarts < 1) throw ConfigError("na_infer: needs at least one restart");
    Matrixf candidates = sample_prior(problem, gs.restarts, seed);
    Matrixf targets(gs.restarts, y.size());
    for (int r = 0; r < gs.restarts; ++r)
        for (std::size_t c = 0; c < y.size(); ++c) targets(r, c) = y[c];
    const Matrixf finals =
        gradient_search(fm, problem.bounds, std::move(candidates), targets, gs);
    return collect_proposals(fm, finals, y);
}

std::vector<ProposalSet> na_infer_batch(const ForwardModel& fm, const ProblemSpec& problem,
                                        const Matrixf& ys, const GradientSearchSettings& gs,
                                        std::uint64_t seed) {
    const std::size_t q = ys.rows();
    std::vector<ProposalSet> out;
    out.reserve(q);

    // Process queries in blocks; rows are independent so blocking does not
    // change any result, it only bounds the working-set size.
    const std::size_t rows_per_query = static_cast<std::size_t>(gs.restarts);
    const std::size_t block_queries =
        std::max<std::size_t>(1, 16384 / std::max<std::size_t>(1, rows_per_query));

    for (std::size_t q0 = 0; q0 < q; q0 += block_queries) {
        const std::size_t qn = std::min(block_queries, q - q0);
        Matrixf candidates(qn * rows_per_query, problem.dim_x);
        Matrixf targets(qn * rows_per_query, ys.cols());
        for (std::size_t i = 0; i < qn; ++i) {
            const Matrixf init =
                sample_prior(problem, rows_per_query, derive_seed(seed, 0x200 + q0 + i));
            for (std::size_t r = 0; r < rows_per_query; ++r) {
                for (std::size_t c = 0; c < static_cast<std::size_t>(problem.dim_x); ++c)
                    candidates(i * rows_per_query + r, c) = init(r, c);
                for (std::size_t c = 0; c < ys.cols(); ++c)
                    targets(i * rows_per_query + r, c) = ys(q0 + i, c);
            }
        }
        const Matrixf finals =
            gradient_search(fm, problem.bounds, std::move(candidates), targets, gs);
        for (std::size_t i = 0; i < qn; ++i) {
            const Matrixf per_query = finals.slice_rows(i * rows_per_query, rows_per_query);
            std::vector<float> y(ys.row(q0 + i), ys.row(q0 + i) + ys.cols());
            out.push_back(collect_proposals(fm, per_query, y));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Bundle persistence
// ---------------------------------------------------------------------------

void save_bundle(const MixtureManifoldModel& model, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    save_checkpoint(model.forward.net, (fs::path(dir) / "forward.ckpt").string());
    for (int m = 0; m < model.manifold_count(); ++m)
        save_checkpoint(model.backwards[m].net,
                        (fs::path(dir) / ("backward_" + std::to_string(m) + ".ckpt")).string());

    nlohmann::json j;
    j["problem"] = model.problem;
    j["k"] = model.manifold_count();
    j["gamma"] = model.boundary_weight;
    j["n_prime"] = model.n_augmented;
    j["seed"] = model.base_seed;
    j["bounds"] = {{"lo", model.bounds.lo}, {"hi", model.bounds.hi}};
    nlohmann::json manifolds = nlohmann::json::array();
    for (const auto& bm : model.backwards)
        manifolds.push_back({{"index", bm.manifold_index},
                             {"seed", bm.seed},
                             {"provenance", to_string(bm.provenance)},
                             {"training_samples", bm.training_samples}});
    j["manifolds"] = manifolds;

    std::ofstream f(fs::path(dir) / "model.json");
    if (!f) throw IoError("cannot write model.json in " + dir);
    f << j.dump(2) << "\n";
}

MixtureManifoldModel load_bundle(const std::string& dir) {
    namespace fs = std::filesystem;
    std::ifstream f(fs::path(dir) / "model.json");
    if (!f) throw IoError("cannot open model.json in " + dir);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("model.json: ") + e.what());
    }

    MixtureManifoldModel model;
    model.problem = j.at("problem").get<std::string>();
    model.boundary_weight = j.at("gamma").get<double>();
    model.n_augmented = j.at("n_prime").get<std::size_t>();
    model.base_seed = j.at("seed").get<std::uint64_t>();
    model.bounds.lo = j.at("bounds").at("lo").get<std::vector<double>>();
    model.bounds.hi = j.at("bounds").at("hi").get<std::vector<double>>();

    model.forward.net = load_checkpoint((fs::path(dir) / "forward.ckpt").string());
    model.forward.net.set_mode(Mode::Inference);
    const int k = j.at("k").get<int>();
    for (int m = 0; m < k; ++m) {
        BackwardModel bm;
        bm.net =
            load_checkpoint((fs::path(dir) / ("backward_" + std::to_string(m) + ".ckpt")).string());
        bm.net.set_mode(Mode::Inference);
        const auto& meta = j.at("manifolds").at(m);
        bm.manifold_index = meta.at("index").get<int>();
        bm.seed = meta.at("seed").get<std::uint64_t>();
        bm.training_samples = meta.at("training_samples").get<std::size_t>();
        bm.provenance = meta.at("provenance").get<std::string>() == "real"
                            ? Provenance::Real
                            : Provenance::ForwardGenerated;
        bm.boundary_weight = model.boundary_weight;
        model.backwards.push_back(std::move(bm));
    }
    return model;
}

}  // namespace mmn
