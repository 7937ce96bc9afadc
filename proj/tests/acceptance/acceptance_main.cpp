// End-to-end acceptance suite. Drives the CLI through the desk-profile
// pipelines (3 pinned seeds, sine + arm), then checks each criterion and
// prints one [PASS]/[FAIL] line per criterion. Exit code 0 iff all pass.
//
// Criteria:
//   1 exact-math suite (simulators, boundary loss forms, shell lattice,
//     best-of-T monotonicity)
//   2 finite-difference gradient suite (>= 20 random nets incl. batch norm)
//   3 frozen-forward hash invariance + exact argmin selection
//   4 sine desk run thresholds
//   5 arm desk run threshold
//   6 ordering claims over 3 seeds (mixture vs tandem, K-sweep endpoints,
//     augmentation crossover), majority vote
//   7 batched mixture inference >= 5x faster than the iterative baseline
//   8 byte-identical rerun of the sine pipeline

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "mmn/checkpoint.hpp"
#include "mmn/dataset.hpp"
#include "mmn/eval.hpp"
#include "mmn/inverse.hpp"
#include "mmn/rng.hpp"
#include "mmn/simulators.hpp"

namespace fs = std::filesystem;
using namespace mmn;

namespace {

const std::string cli = MMN_CLI_PATH;
fs::path work;

int failures = 0;

void report(int criterion, const std::string& name, bool pass, const std::string& detail) {
    std::cout << (pass ? "[PASS]" : "[FAIL]") << " criterion " << criterion << ": " << name;
    if (!detail.empty()) std::cout << " (" << detail << ")";
    std::cout << std::endl;
    if (!pass) ++failures;
}

void run_or_die(const std::string& cmd) {
    const int rc = std::system((cmd + " > /dev/null").c_str());
    const int code = (rc == -1) ? -1 : (WIFEXITED(rc) ? WEXITSTATUS(rc) : -1);
    if (code != 0) {
        std::cerr << "[FAIL] pipeline command failed (" << code << "): " << cmd << std::endl;
        std::exit(1);
    }
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

// summary.csv -> mean resim error by T
std::map<int, double> read_summary(const fs::path& path) {
    std::ifstream f(path);
    std::map<int, double> out;
    std::string line;
    std::getline(f, line);
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        out[std::stoi(line.substr(0, comma))] = std::stod(line.substr(comma + 1));
    }
    return out;
}

// k_sweep.csv -> mean resim t1 by K
std::map<int, double> read_k_sweep(const fs::path& path) {
    std::ifstream f(path);
    std::map<int, double> out;
    std::string line;
    std::getline(f, line);
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string k, v;
        std::getline(ss, k, ',');
        std::getline(ss, v, ',');
        out[std::stoi(k)] = std::stod(v);
    }
    return out;
}

// aug_sweep.csv -> relative error by ratio
std::map<double, double> read_aug_sweep(const fs::path& path) {
    std::ifstream f(path);
    std::map<double, double> out;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#' || line[0] == 'r') continue;
        std::stringstream ss(line);
        std::string ratio, n, v, rel;
        std::getline(ss, ratio, ',');
        std::getline(ss, n, ',');
        std::getline(ss, v, ',');
        std::getline(ss, rel, ',');
        out[std::stod(ratio)] = std::stod(rel);
    }
    return out;
}

const std::vector<std::uint64_t> seeds = {101, 202, 303};

std::string run_tag(const std::string& prefix, std::uint64_t seed) {
    return prefix + std::to_string(seed);
}

// ---------------------------------------------------------------------------
// Pipelines (desk profile; seeds pinned above)
// ---------------------------------------------------------------------------

void run_pipelines() {
    const auto t0 = std::chrono::steady_clock::now();
    for (const auto seed : seeds) {
        const std::string s = std::to_string(seed);
        // Sine
        run_or_die(cli + " gen-data --problem sine --seed " + s + " --out " + q(work) +
                   " --run-id " + run_tag("sine-data-", seed));
        const fs::path sine_data = work / run_tag("sine-data-", seed) / "dataset.csv";
        run_or_die(cli + " train --data " + q(sine_data) + " --seed " + s + " --out " + q(work) +
                   " --run-id " + run_tag("sine-mmn-", seed));
        const fs::path sine_bundle = work / run_tag("sine-mmn-", seed) / "bundle";
        run_or_die(cli + " eval --bundle " + q(sine_bundle) + " --data " + q(sine_data) +
                   " --t-max 6 --out " + q(work) + " --run-id " + run_tag("sine-eval-", seed));
        run_or_die(cli + " train --data " + q(sine_data) + " --seed " + s +
                   " --k 1 --augment off --forward-from " + q(sine_bundle) + " --out " + q(work) +
                   " --run-id " + run_tag("sine-td-", seed));
        run_or_die(cli + " eval --bundle " + q(work / run_tag("sine-td-", seed) / "bundle") +
                   " --data " + q(sine_data) + " --t-max 1 --out " + q(work) + " --run-id " +
                   run_tag("sine-td-eval-", seed));
        run_or_die(cli + " ablate --sweep k --bundle " + q(sine_bundle) + " --data " +
                   q(sine_data) + " --max-k 6 --out " + q(work) + " --run-id " +
                   run_tag("sine-ksweep-", seed));
        run_or_die(cli + " ablate --sweep aug --bundle " + q(sine_bundle) + " --data " +
                   q(sine_data) + " --ratios 0.5,1,2,5 --seed " + s + " --out " + q(work) +
                   " --run-id " + run_tag("sine-augsweep-", seed));

        // Arm
        run_or_die(cli + " gen-data --problem arm --seed " + s + " --out " + q(work) +
                   " --run-id " + run_tag("arm-data-", seed));
        const fs::path arm_data = work / run_tag("arm-data-", seed) / "dataset.csv";
        run_or_die(cli + " train --data " + q(arm_data) + " --seed " + s + " --out " + q(work) +
                   " --run-id " + run_tag("arm-mmn-", seed));
        const fs::path arm_bundle = work / run_tag("arm-mmn-", seed) / "bundle";
        run_or_die(cli + " eval --bundle " + q(arm_bundle) + " --data " + q(arm_data) +
                   " --t-max 6 --out " + q(work) + " --run-id " + run_tag("arm-eval-", seed));
        run_or_die(cli + " train --data " + q(arm_data) + " --seed " + s +
                   " --k 1 --augment off --forward-from " + q(arm_bundle) + " --out " + q(work) +
                   " --run-id " + run_tag("arm-td-", seed));
        run_or_die(cli + " eval --bundle " + q(work / run_tag("arm-td-", seed) / "bundle") +
                   " --data " + q(arm_data) + " --t-max 1 --out " + q(work) + " --run-id " +
                   run_tag("arm-td-eval-", seed));

        const double mins = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                                .count() / 60.0;
        std::cout << "[info] pipelines for seed " << seed << " done (" << mins
                  << " min elapsed)" << std::endl;
    }

    // Criterion 8 rerun: the sine seed-101 pipeline, fresh directories.
    run_or_die(cli + " gen-data --problem sine --seed 101 --out " + q(work) +
               " --run-id rerun-data");
    run_or_die(cli + " train --data " + q(work / "rerun-data" / "dataset.csv") +
               " --seed 101 --out " + q(work) + " --run-id rerun-mmn");
    run_or_die(cli + " eval --bundle " + q(work / "rerun-mmn" / "bundle") + " --data " +
               q(work / "rerun-data" / "dataset.csv") + " --t-max 6 --out " + q(work) +
               " --run-id rerun-eval");
}

// ---------------------------------------------------------------------------
// Criterion 1: exact math
// ---------------------------------------------------------------------------

void criterion_exact_math() {
    bool ok = true;
    std::string why;
    auto expect = [&](bool cond, const std::string& what) {
        if (!cond && ok) {
            ok = false;
            why = what;
        }
    };
    const double tol = 1e-6;

    expect(std::abs(sine_forward(0.0, 0.0) - 1.0) <= tol, "sine(0,0)");
    expect(std::abs(sine_forward(1.0 / 6.0, 1.0 / 3.0)) <= tol, "sine(1/6,1/3)");
    expect(std::abs(sine_forward(-1.0 / 6.0, 1.0 / 3.0) + 2.0) <= tol, "sine(-1/6,1/3)");

    const auto rest = arm_forward({0, 0, 0, 0});
    expect(std::abs(rest[0]) <= tol && std::abs(rest[1] - 2.0) <= tol, "arm rest pose");
    const auto swung = arm_forward({1.0, 3.14159265358979323846 / 2.0, 0, 0});
    expect(std::abs(swung[0] - 3.0) <= tol && std::abs(swung[1]) <= tol, "arm swung pose");

    // Boundary loss: examples and the two formulations.
    const Bounds box{{-1.0, -1.0}, {1.0, 1.0}};
    std::vector<double> grad;
    expect(boundary_loss({0.0, 0.0}, box, &grad) == 0.0 && grad[0] == 0.0 && grad[1] == 0.0,
           "boundary interior");
    expect(std::abs(boundary_loss({1.2, -1.5}, box, &grad) - 0.7) <= tol && grad[0] == 1.0 &&
               grad[1] == -1.0,
           "boundary outside");
    Rng rng(99);
    for (int trial = 0; trial < 1000 && ok; ++trial) {
        Bounds b;
        std::vector<double> x(3);
        for (int d = 0; d < 3; ++d) {
            const double half = rng.uniform(0.1, 3.0);
            b.lo.push_back(-half);
            b.hi.push_back(half);
            x[d] = rng.uniform(-5.0, 5.0);
        }
        expect(boundary_loss(x, b) == boundary_loss_relu_form(x, b), "boundary dual form");
    }

    // Shell sampler endpoint mapping and lattice membership.
    expect((30.0 - 50.0) / 20.0 == -1.0 && (70.0 - 50.0) / 20.0 == 1.0, "shell endpoints");
    const auto shell = shell_problem();
    const Matrixf samples = sample_prior(shell, 5000, 4);
    bool on_lattice = true;
    bool saw_lo = false, saw_hi = false;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double v = samples.data()[i] * 20.0 + 50.0;
        on_lattice = on_lattice && std::abs(v - std::round(v)) < 1e-4 && v >= 29.5 && v <= 70.5;
        saw_lo = saw_lo || samples.data()[i] == -1.0f;
        saw_hi = saw_hi || samples.data()[i] == 1.0f;
    }
    expect(on_lattice && saw_lo && saw_hi, "shell lattice");

    // Best-of-T monotonicity, exactly, on synthetic outcome lists.
    std::vector<QueryOutcome> queries(200);
    for (auto& qo : queries) {
        const int n = 1 + static_cast<int>(rng.uniform_int(0, 5));
        for (int t = 0; t < n; ++t) {
            qo.true_error.push_back(rng.uniform(0.0, 2.0));
            qo.surrogate_error.push_back(0.0);
            qo.source_index.push_back(t);
        }
    }
    const auto curve = summarize(queries, 8);
    for (int t = 1; t < 8; ++t) expect(curve[t] <= curve[t - 1], "best-of-T monotonicity");

    report(1, "exact-math suite", ok, ok ? "simulators, boundary forms, lattice, r(T)" : why);
}

// ---------------------------------------------------------------------------
// Criterion 2: finite-difference gradients
// ---------------------------------------------------------------------------

void criterion_gradients() {
    int nets_checked = 0;
    int bn_nets = 0;
    double worst = 0.0;
    bool ok = true;

    const auto close = [&](double a, double b) {
        const double rel = std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-4});
        worst = std::max(worst, rel);
        return rel < 1e-4;
    };

    for (std::uint64_t seed = 1; nets_checked < 24 && seed < 400; ++seed) {
        Rng rng(seed * 2654435761ull);
        NetworkSpec spec;
        spec.input_dim = 2 + static_cast<int>(rng.uniform_int(0, 2));
        spec.output_dim = 1 + static_cast<int>(rng.uniform_int(0, 2));
        const int depth = 1 + static_cast<int>(rng.uniform_int(0, 2));
        for (int l = 0; l < depth; ++l)
            spec.hidden_layers.push_back(3 + static_cast<int>(rng.uniform_int(0, 5)));
        spec.use_batch_norm = (seed % 2) == 0;

        Network<double> net(spec, rng.next_u64());
        Matrixd x(4, spec.input_dim), targets(4, spec.output_dim);
        for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] = rng.gaussian();
        for (std::size_t i = 0; i < targets.size(); ++i) targets.data()[i] = rng.gaussian();

        // Skip nets that sit on a rectifier kink.
        {
            ForwardCache<double> cache;
            net.set_mode(Mode::Training);
            net.forward_train_cached(x, cache);
            double kink = 1e30;
            for (std::size_t l = 0; l + 1 < cache.layers.size(); ++l)
                for (std::size_t i = 0; i < cache.layers[l].act_in.size(); ++i)
                    kink = std::min(kink, std::abs(cache.layers[l].act_in.data()[i]));
            if (kink < 1e-5) continue;
        }

        net.set_mode(Mode::Training);
        Gradients<double> grads = net.make_gradients();
        (void)net.param_gradients(x, targets, grads);

        const auto loss_of = [&]() {
            net.set_mode(Mode::Training);
            const Matrixd out = net.forward(x);
            double s = 0.0;
            for (std::size_t i = 0; i < out.size(); ++i) {
                const double d = out.data()[i] - targets.data()[i];
                s += d * d;
            }
            return s / static_cast<double>(out.size());
        };

        auto params = net.trainable_tensors();
        auto grad_refs = net.gradient_tensors(grads);
        const double h = 1e-4;
        for (std::size_t t = 0; t < params.size() && ok; ++t) {
            for (std::size_t i = 0; i < params[t].size && ok; ++i) {
                const double saved = params[t].data[i];
                params[t].data[i] = saved + h;
                const double lp = loss_of();
                params[t].data[i] = saved - h;
                const double lm = loss_of();
                params[t].data[i] = saved;
                ok = ok && close(grad_refs[t].data[i], (lp - lm) / (2 * h));
            }
        }

        // Input gradients, inference mode, against the same oracle.
        net.set_mode(Mode::Inference);
        std::vector<double> x0(x.row(0), x.row(0) + x.cols());
        std::vector<double> t0(targets.row(0), targets.row(0) + targets.cols());
        const auto gin = net.input_gradients(x0, t0);
        const auto input_loss = [&](const std::vector<double>& v) {
            const Matrixd out = net.forward_inference(Matrixd::from_rows(1, v.size(), v));
            double s = 0.0;
            for (std::size_t c = 0; c < out.cols(); ++c) {
                const double d = out(0, c) - t0[c];
                s += d * d;
            }
            return s;
        };
        for (std::size_t i = 0; i < x0.size() && ok; ++i) {
            auto v = x0;
            v[i] = x0[i] + h;
            const double lp = input_loss(v);
            v[i] = x0[i] - h;
            const double lm = input_loss(v);
            ok = ok && close(gin[i], (lp - lm) / (2 * h));
        }

        ++nets_checked;
        if (spec.use_batch_norm) ++bn_nets;
        if (!ok) break;
    }

    char detail[128];
    std::snprintf(detail, sizeof(detail), "%d nets (%d with batch norm), worst rel err %.2e",
                  nets_checked, bn_nets, worst);
    report(2, "gradient suite vs central finite differences", ok && nets_checked >= 20, detail);
}

// ---------------------------------------------------------------------------
// Criterion 3: frozen-forward hash + exact selection
// ---------------------------------------------------------------------------

void criterion_invariants() {
    const MixtureManifoldModel model =
        load_bundle((work / "sine-mmn-101" / "bundle").string());
    const ProblemSpec problem = sine_problem();

    const std::uint64_t before = checkpoint_hash(model.forward.net);

    // Exercise every operation that touches the frozen forward model.
    Rng rng(31337);
    Matrixf queries(1000, 1);
    for (std::size_t i = 0; i < queries.rows(); ++i)
        queries(i, 0) = static_cast<float>(rng.uniform(-2.0, 2.0));
    const auto sets = mmn_infer_batch(model, queries);
    (void)na_infer_batch(model.forward, problem, queries.slice_rows(0, 20),
                         GradientSearchSettings{10, 50, 0.01, 0.1}, 7);
    const Dataset aug = generate_augmented(model.forward, problem, 500, 3);
    TrainSettings tiny;
    tiny.epochs = 2;
    tiny.batch_size = 64;
    (void)train_backward(model.forward, aug.y_of(Split::Train), aug.y_of(Split::Val),
                         NetworkSpec{1, 2, {8}, true}, 0.1, problem.bounds, tiny, 5);

    const std::uint64_t after = checkpoint_hash(model.forward.net);
    const bool hash_ok = before == after;

    // The tandem pipeline reused the forward model; bytes must be identical.
    const bool file_ok = slurp(work / "sine-mmn-101" / "bundle" / "forward.ckpt") ==
                         slurp(work / "sine-td-101" / "bundle" / "forward.ckpt");

    // Exact argmin selection over the manifolds, brute-forced.
    bool argmin_ok = true;
    for (std::size_t r = 0; r < queries.rows() && argmin_ok; ++r) {
        double best = 1e300;
        for (int m = 0; m < model.manifold_count(); ++m) {
            const Matrixf x_hat = model.backwards[m].net.forward_inference(
                Matrixf::from_rows(1, 1, {queries(r, 0)}));
            const Matrixf resim = model.forward.net.forward_inference(x_hat);
            double s = 0.0;
            for (std::size_t c = 0; c < resim.cols(); ++c) {
                const double d = static_cast<double>(resim(0, c)) - queries(r, 0);
                s += d * d;
            }
            best = std::min(best, s / static_cast<double>(resim.cols()));
        }
        argmin_ok = sets[r].selected().surrogate_error == best;
    }

    report(3, "frozen-forward hash and exact argmin selection",
           hash_ok && file_ok && argmin_ok,
           std::string("hash ") + (hash_ok ? "stable" : "CHANGED") + ", argmin exact on 1000 queries: " +
               (argmin_ok ? "yes" : "no"));
}

// ---------------------------------------------------------------------------
// Criteria 4 and 5: desk-run thresholds
// ---------------------------------------------------------------------------

void criterion_sine_desk() {
    const Dataset ds = load_dataset((work / "sine-data-101" / "dataset.csv").string());
    const MixtureManifoldModel model =
        load_bundle((work / "sine-mmn-101" / "bundle").string());

    // Forward validation MSE, recomputed from the frozen checkpoint.
    const Matrixf pred = model.forward.net.forward_inference(ds.x_of(Split::Val));
    const Matrixf truth = ds.y_of(Split::Val);
    double mse = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = static_cast<double>(pred.data()[i]) - truth.data()[i];
        mse += d * d;
    }
    mse /= static_cast<double>(pred.size());

    const auto summary = read_summary(work / "sine-eval-101" / "summary.csv");
    const double r1 = summary.at(1);
    const double r6 = summary.at(6);

    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "fwd val MSE %.3e (<=1e-3), r(1) %.3e (<=2e-2), r(6) %.3e (<= r(1))", mse, r1,
                  r6);
    report(4, "sine desk run", mse <= 1e-3 && r1 <= 2e-2 && r6 <= r1, detail);
}

void criterion_arm_desk() {
    const auto summary = read_summary(work / "arm-eval-101" / "summary.csv");
    const double r1 = summary.at(1);
    char detail[80];
    std::snprintf(detail, sizeof(detail), "r(1) %.3e (<=5e-3)", r1);
    report(5, "arm desk run", r1 <= 5e-3, detail);
}

// ---------------------------------------------------------------------------
// Criterion 6: ordering claims, majority over the pinned seeds
// ---------------------------------------------------------------------------

void criterion_orderings() {
    int mmn_beats_td_sine = 0, mmn_beats_td_arm = 0, ksweep_drop = 0, aug_crossover = 0;
    std::ostringstream detail;

    for (const auto seed : seeds) {
        const double sine_mmn = read_summary(work / run_tag("sine-eval-", seed) / "summary.csv").at(1);
        const double sine_td =
            read_summary(work / run_tag("sine-td-eval-", seed) / "summary.csv").at(1);
        const double arm_mmn = read_summary(work / run_tag("arm-eval-", seed) / "summary.csv").at(1);
        const double arm_td =
            read_summary(work / run_tag("arm-td-eval-", seed) / "summary.csv").at(1);
        if (sine_mmn < sine_td) ++mmn_beats_td_sine;
        if (arm_mmn < arm_td) ++mmn_beats_td_arm;

        const auto ks = read_k_sweep(work / run_tag("sine-ksweep-", seed) / "k_sweep.csv");
        if (ks.at(6) < ks.at(1)) ++ksweep_drop;

        const auto aug = read_aug_sweep(work / run_tag("sine-augsweep-", seed) / "aug_sweep.csv");
        bool crossed = false;
        for (const auto& [ratio, rel] : aug)
            if (ratio > 0.0 && ratio <= 5.0 && rel < 1.0) crossed = true;
        if (crossed) ++aug_crossover;

        detail << "s" << seed << "[mmn/td sine " << sine_mmn << "/" << sine_td << ", arm "
               << arm_mmn << "/" << arm_td << ", k6/k1 " << ks.at(6) << "/" << ks.at(1) << "] ";
    }

    const bool ok = mmn_beats_td_sine >= 2 && mmn_beats_td_arm >= 2 && ksweep_drop >= 2 &&
                    aug_crossover >= 2;
    std::ostringstream counts;
    counts << "votes of " << seeds.size() << ": mmn<td sine " << mmn_beats_td_sine << ", arm "
           << mmn_beats_td_arm << ", k-sweep drop " << ksweep_drop << ", aug crossover "
           << aug_crossover;
    report(6, "ordering claims (majority over 3 seeds)", ok, counts.str());
    std::cout << "[info] " << detail.str() << std::endl;
}

// ---------------------------------------------------------------------------
// Criterion 7: speed ordering
// ---------------------------------------------------------------------------

void criterion_speed() {
    const MixtureManifoldModel model =
        load_bundle((work / "sine-mmn-101" / "bundle").string());
    const Dataset ds = load_dataset((work / "sine-data-101" / "dataset.csv").string());
    const Matrixf test_y = ds.y_of(Split::Test);
    Matrixf queries(1000, 1);
    for (std::size_t i = 0; i < queries.rows(); ++i)
        queries(i, 0) = test_y(i % test_y.rows(), 0);

    const TimingResult mmn_t = time_mmn_inference(model, queries, false);
    const TimingResult na_t = time_na_inference(
        model.forward, sine_problem(), queries, GradientSearchSettings{50, 300, 0.01, 0.1}, 7,
        false);

    const double ratio = na_t.batched_s / std::max(mmn_t.batched_s, 1e-12);
    char detail[128];
    std::snprintf(detail, sizeof(detail),
                  "1000 queries: mixture %.3fs, baseline %.1fs, ratio %.0fx (>=5x)",
                  mmn_t.batched_s, na_t.batched_s, ratio);
    report(7, "speed ordering", ratio >= 5.0, detail);
}

// ---------------------------------------------------------------------------
// Criterion 8: determinism
// ---------------------------------------------------------------------------

void criterion_determinism() {
    const bool data_ok = slurp(work / "sine-data-101" / "dataset.csv") ==
                         slurp(work / "rerun-data" / "dataset.csv");
    const bool fwd_ok = slurp(work / "sine-mmn-101" / "bundle" / "forward.ckpt") ==
                        slurp(work / "rerun-mmn" / "bundle" / "forward.ckpt");
    bool bwd_ok = true;
    for (int m = 0; m < 6; ++m) {
        const std::string name = "backward_" + std::to_string(m) + ".ckpt";
        bwd_ok = bwd_ok && slurp(work / "sine-mmn-101" / "bundle" / name) ==
                               slurp(work / "rerun-mmn" / "bundle" / name);
    }
    const bool summary_ok = slurp(work / "sine-eval-101" / "summary.csv") ==
                            slurp(work / "rerun-eval" / "summary.csv");
    const bool report_ok = slurp(work / "sine-eval-101" / "report.csv") ==
                           slurp(work / "rerun-eval" / "report.csv");

    std::ostringstream detail;
    detail << "dataset " << (data_ok ? "ok" : "DIFFERS") << ", checkpoints "
           << ((fwd_ok && bwd_ok) ? "ok" : "DIFFER") << ", summaries "
           << ((summary_ok && report_ok) ? "ok" : "DIFFER");
    report(8, "byte-identical pipeline rerun", data_ok && fwd_ok && bwd_ok && summary_ok && report_ok,
           detail.str());
}

}  // namespace

int main() {
    if (const char* env = std::getenv("MMN_ACCEPT_DIR"))
        work = env;
    else
        work = fs::current_path() / "acceptance_work";
    fs::remove_all(work);
    fs::create_directories(work);
    std::cout << "[info] acceptance workspace: " << work << std::endl;

    criterion_exact_math();
    criterion_gradients();

    const auto t0 = std::chrono::steady_clock::now();
    run_pipelines();
    std::cout << "[info] pipelines finished in "
              << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() /
                     60.0
              << " min" << std::endl;

    criterion_invariants();
    criterion_sine_desk();
    criterion_arm_desk();
    criterion_orderings();
    criterion_speed();
    criterion_determinism();

    if (failures == 0) {
        std::cout << "all acceptance criteria passed" << std::endl;
        return 0;
    }
    std::cout << failures << " acceptance criteria failed" << std::endl;
    return 1;
}
