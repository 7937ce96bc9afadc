// Command-line surface for the inverse-problem benchmark pipeline:
//   mmn gen-data   sample a benchmark dataset
//   mmn train      train the forward surrogate and K inverse manifolds
//   mmn eval       re-simulation error report / timing for a trained bundle
//   mmn ablate     manifold-count and augmentation sweeps
// Exit codes: 0 success, 1 runtime/training failure, 2 usage/config error.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mmn/checkpoint.hpp"
#include "mmn/dataset.hpp"
#include "mmn/errors.hpp"
#include "mmn/eval.hpp"
#include "mmn/inverse.hpp"
#include "mmn/rng.hpp"
#include "mmn/simulators.hpp"

namespace fs = std::filesystem;
using namespace mmn;

namespace {

// ---------------------------------------------------------------------------
// Profiles: defaults for anything the user does not set explicitly.
// `paper` matches the published experiment scale, `desk` is the fast profile
// used by CI-speed acceptance runs.
// ---------------------------------------------------------------------------

struct Profile {
    DatasetSizes sizes;
    int epochs;
    int batch;
    double lr;
    int k;
    long n_prime;
};

Profile profile_by_name(const std::string& name) {
    if (name == "paper") return {{8000, 2000, 1000}, 500, 1024, 1e-3, 6, 40000};
    if (name == "desk") return {{2000, 500, 500}, 100, 128, 1e-3, 6, 10000};
    throw ConfigError("unknown profile: " + name);
}

std::vector<int> profile_hidden(const std::string& profile, const ProblemSpec& problem) {
    if (profile == "desk") return {128, 128, 128};
    if (problem.name == "sine") return {500, 500, 500, 500};
    if (problem.name == "arm") return {500, 500, 500};
    if (problem.name == "shell") return {1700, 1700, 1700};  // fully-connected desk-tractable stand-in
    throw ConfigError("no architecture preset for problem: " + problem.name);
}

template <typename T>
std::vector<T> parse_csv_list(const std::string& text, const std::string& what) {
    std::vector<T> out;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        if (cell.empty()) continue;
        char* end = nullptr;
        const double v = std::strtod(cell.c_str(), &end);
        if (end == cell.c_str() || *end != '\0')
            throw ConfigError(what + ": bad list entry '" + cell + "'");
        out.push_back(static_cast<T>(v));
    }
    if (out.empty()) throw ConfigError(what + ": empty list");
    return out;
}

// ---------------------------------------------------------------------------
// Shared option state. Sentinels (-1 / empty) mean "resolve from profile",
// so a serialized config reparses to the same effective settings.
// ---------------------------------------------------------------------------

struct Options {
    std::string out_root;
    std::string run_id;
    std::string problem = "sine";
    std::string profile = "desk";
    std::string sizes_csv;
    std::uint64_t seed = 1;

    std::string data_path;
    std::string forward_from;
    std::string bundle;
    int k = -1;
    long n_prime = -1;
    double gamma = 0.1;
    int epochs = -1;
    int batch = -1;
    double lr = -1.0;
    std::string hidden_csv;
    std::string augment = "on";

    int t_max = 6;
    bool na = false;
    int restarts = 50;
    int steps = 300;
    double na_lr = 0.01;
    bool time_flag = false;
    int time_queries = 1000;

    std::string sweep;
    int max_k = -1;
    std::string ratios_csv = "0.5,1,2,5";
    bool nested = true;

    std::string external_cmd;
    std::string exchange_dir;
};

// ---------------------------------------------------------------------------
// Config files: one `key=value` line per option, same keys as the long flags.
// Command-line flags take precedence over file values over defaults, and the
// effective configuration is echoed into every run directory, so a run can be
// reproduced from its own echo.
// ---------------------------------------------------------------------------

struct FieldRef {
    enum Kind { Str, U64, I32, I64, Dbl, Bool } kind;
    void* p;
};

std::map<std::string, FieldRef> field_refs(Options& o) {
    return {
        {"out", {FieldRef::Str, &o.out_root}},
        {"run-id", {FieldRef::Str, &o.run_id}},
        {"problem", {FieldRef::Str, &o.problem}},
        {"profile", {FieldRef::Str, &o.profile}},
        {"sizes", {FieldRef::Str, &o.sizes_csv}},
        {"seed", {FieldRef::U64, &o.seed}},
        {"data", {FieldRef::Str, &o.data_path}},
        {"forward-from", {FieldRef::Str, &o.forward_from}},
        {"bundle", {FieldRef::Str, &o.bundle}},
        {"k", {FieldRef::I32, &o.k}},
        {"n-prime", {FieldRef::I64, &o.n_prime}},
        {"gamma", {FieldRef::Dbl, &o.gamma}},
        {"epochs", {FieldRef::I32, &o.epochs}},
        {"batch", {FieldRef::I32, &o.batch}},
        {"lr", {FieldRef::Dbl, &o.lr}},
        {"hidden", {FieldRef::Str, &o.hidden_csv}},
        {"augment", {FieldRef::Str, &o.augment}},
        {"t-max", {FieldRef::I32, &o.t_max}},
        {"na", {FieldRef::Bool, &o.na}},
        {"restarts", {FieldRef::I32, &o.restarts}},
        {"steps", {FieldRef::I32, &o.steps}},
        {"na-lr", {FieldRef::Dbl, &o.na_lr}},
        {"time", {FieldRef::Bool, &o.time_flag}},
        {"time-queries", {FieldRef::I32, &o.time_queries}},
        {"sweep", {FieldRef::Str, &o.sweep}},
        {"max-k", {FieldRef::I32, &o.max_k}},
        {"ratios", {FieldRef::Str, &o.ratios_csv}},
        {"nested", {FieldRef::Bool, &o.nested}},
        {"external-cmd", {FieldRef::Str, &o.external_cmd}},
        {"exchange-dir", {FieldRef::Str, &o.exchange_dir}},
    };
}

std::string field_to_string(const FieldRef& f) {
    char buf[64];
    switch (f.kind) {
        case FieldRef::Str: return *static_cast<std::string*>(f.p);
        case FieldRef::U64:
            return std::to_string(*static_cast<std::uint64_t*>(f.p));
        case FieldRef::I32: return std::to_string(*static_cast<int*>(f.p));
        case FieldRef::I64: return std::to_string(*static_cast<long*>(f.p));
        case FieldRef::Dbl:
            std::snprintf(buf, sizeof(buf), "%.17g", *static_cast<double*>(f.p));
            return buf;
        case FieldRef::Bool: return *static_cast<bool*>(f.p) ? "true" : "false";
    }
    return "";
}

void field_from_string(const FieldRef& f, const std::string& v, const std::string& key) {
    char* end = nullptr;
    switch (f.kind) {
        case FieldRef::Str: *static_cast<std::string*>(f.p) = v; return;
        case FieldRef::U64:
            *static_cast<std::uint64_t*>(f.p) = std::strtoull(v.c_str(), &end, 10);
            break;
        case FieldRef::I32:
            *static_cast<int*>(f.p) = static_cast<int>(std::strtol(v.c_str(), &end, 10));
            break;
        case FieldRef::I64: *static_cast<long*>(f.p) = std::strtol(v.c_str(), &end, 10); break;
        case FieldRef::Dbl: *static_cast<double*>(f.p) = std::strtod(v.c_str(), &end); break;
        case FieldRef::Bool:
            if (v == "true" || v == "1")
                *static_cast<bool*>(f.p) = true;
            else if (v == "false" || v == "0")
                *static_cast<bool*>(f.p) = false;
            else
                throw ConfigError("config: boolean expected for '" + key + "', got '" + v + "'");
            return;
    }
    if (end == v.c_str() || *end != '\0')
        throw ConfigError("config: bad value for '" + key + "': '" + v + "'");
}

// Tracks which keys a subcommand exposes and which arrived on the command
// line, so file values fill exactly the unset ones.
struct SubCtx {
    CLI::App* sub = nullptr;
    std::string config_path;
    std::vector<std::string> keys;
    std::map<std::string, CLI::Option*> cli_opts;
};

void apply_config_file(SubCtx& ctx, Options& opt) {
    if (ctx.config_path.empty()) return;
    std::ifstream f(ctx.config_path);
    if (!f) throw ConfigError("cannot open config file: " + ctx.config_path);
    auto refs = field_refs(opt);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);
        if (std::find(ctx.keys.begin(), ctx.keys.end(), key) == ctx.keys.end())
            throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key +
                              "'");
        if (ctx.cli_opts.at(key)->count() > 0) continue;  // flags win
        field_from_string(refs.at(key), value, key);
    }
}

void write_config_echo(const SubCtx& ctx, Options& opt, const fs::path& dir) {
    std::ofstream f(dir / "config.echo", std::ios::trunc);
    auto refs = field_refs(opt);
    for (const auto& key : ctx.keys) f << key << "=" << field_to_string(refs.at(key)) << "\n";
}

fs::path resolve_out_dir(const Options& opt, const std::string& cmd) {
    std::string root = opt.out_root;
    if (root.empty()) {
        if (const char* env = std::getenv("MMN_OUT_ROOT")) root = env;
    }
    if (root.empty()) root = "runs";
    std::string run_id = opt.run_id;
    if (run_id.empty())
        run_id = cmd + "-" + opt.problem + "-s" + std::to_string(opt.seed);
    fs::path dir = fs::path(root) / run_id;
    fs::create_directories(dir);
    return dir;
}

TrainSettings resolve_train_settings(const Options& opt, const Profile& prof) {
    TrainSettings ts;
    ts.epochs = opt.epochs > 0 ? opt.epochs : prof.epochs;
    ts.batch_size = opt.batch > 0 ? opt.batch : prof.batch;
    ts.lr = opt.lr > 0 ? opt.lr : prof.lr;
    return ts;
}

NetworkSpec make_spec(int in_dim, int out_dim, const std::vector<int>& hidden) {
    NetworkSpec spec;
    spec.input_dim = in_dim;
    spec.output_dim = out_dim;
    spec.hidden_layers = hidden;
    spec.use_batch_norm = true;
    return spec;
}

SimulatorHandle resolve_simulator(const Options& opt, const ProblemSpec& problem) {
    if (problem.binding == SimulatorBinding::External || !opt.external_cmd.empty()) {
        if (opt.external_cmd.empty())
            throw ConfigError("problem '" + problem.name + "' requires --external-cmd");
        const std::string dir = opt.exchange_dir.empty() ? "exchange" : opt.exchange_dir;
        return external_simulator(problem, opt.external_cmd, dir);
    }
    return builtin_simulator(problem);
}

std::uint64_t file_hash(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return fnv1a(bytes);
}

void write_curve_csv(std::ofstream& f, const std::string& model, const TrainRecord& record) {
    char buf[64];
    for (const auto& e : record.curve) {
        f << model << ',' << e.epoch << ',';
        std::snprintf(buf, sizeof(buf), "%.17g", e.train_loss);
        f << buf << ',';
        std::snprintf(buf, sizeof(buf), "%.17g", e.val_loss);
        f << buf << ',';
        std::snprintf(buf, sizeof(buf), "%.17g", e.lr);
        f << buf << '\n';
    }
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

int cmd_gen_data(Options& opt, SubCtx& ctx) {
    const ProblemSpec problem = problem_by_name(opt.problem);
    const Profile prof = profile_by_name(opt.profile);
    DatasetSizes sizes = prof.sizes;
    if (!opt.sizes_csv.empty()) {
        const auto v = parse_csv_list<long>(opt.sizes_csv, "--sizes");
        if (v.size() != 3) throw ConfigError("--sizes expects train,val,test");
        sizes = {static_cast<std::size_t>(v[0]), static_cast<std::size_t>(v[1]),
                 static_cast<std::size_t>(v[2])};
    }

    Dataset ds;
    if (problem.binding == SimulatorBinding::External) {
        ds = generate_dataset_external(resolve_simulator(opt, problem), sizes, opt.seed);
    } else {
        ds = generate_dataset(problem, sizes, opt.seed);
    }

    const fs::path dir = resolve_out_dir(opt, "gen-data");
    const fs::path path = dir / "dataset.csv";
    save_dataset(ds, path.string());
    write_config_echo(ctx, opt, dir);

    char hex[32];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(file_hash(path)));
    std::cout << "dataset: " << path.string() << "\n"
              << "rows: " << ds.rows() << "\n"
              << "hash: " << hex << "\n";
    return 0;
}

int cmd_train(Options& opt, SubCtx& ctx) {
    if (opt.data_path.empty()) throw ConfigError("train requires --data <dataset.csv>");
    const Dataset ds = load_dataset(opt.data_path);
    opt.problem = ds.problem;
    const ProblemSpec problem = problem_by_name(ds.problem);
    const Profile prof = profile_by_name(opt.profile);
    const TrainSettings ts = resolve_train_settings(opt, prof);
    const std::vector<int> hidden = opt.hidden_csv.empty()
                                        ? profile_hidden(opt.profile, problem)
                                        : parse_csv_list<int>(opt.hidden_csv, "--hidden");
    const int k = opt.k > 0 ? opt.k : prof.k;
    const long n_prime = opt.n_prime > 0 ? opt.n_prime : prof.n_prime;
    const bool augment = opt.augment == "on";
    if (opt.augment != "on" && opt.augment != "off")
        throw ConfigError("--augment expects on|off");

    const fs::path dir = resolve_out_dir(opt, "train");
    write_config_echo(ctx, opt, dir);

    ForwardModel fm;
    if (!opt.forward_from.empty()) {
        fm.net = load_checkpoint((fs::path(opt.forward_from) / "forward.ckpt").string());
        fm.net.set_mode(Mode::Inference);
        std::cout << "forward model: reused from " << opt.forward_from << "\n";
    } else {
        fm = train_forward(ds, make_spec(problem.dim_x, problem.dim_y, hidden), ts, opt.seed);
        std::cout << "forward model: best val mse " << fm.record.best_val_loss << "\n";
    }

    const NetworkSpec bwd_spec = make_spec(problem.dim_y, problem.dim_x, hidden);
    const MixtureManifoldModel model =
        train_mmn(fm, problem, k, static_cast<std::size_t>(n_prime), bwd_spec, opt.gamma, ts,
                  opt.seed, augment ? nullptr : &ds);

    const fs::path bundle_dir = dir / "bundle";
    save_bundle(model, bundle_dir.string());

    std::ofstream curves(dir / "curves.csv", std::ios::trunc);
    curves << "model,epoch,train_loss,val_loss,lr\n";
    write_curve_csv(curves, "forward", model.forward.record);
    for (const auto& bm : model.backwards)
        write_curve_csv(curves, "backward_" + std::to_string(bm.manifold_index), bm.record);

    std::cout << "bundle: " << bundle_dir.string() << "\n";
    for (const auto& bm : model.backwards)
        std::cout << "manifold " << bm.manifold_index << ": best val loss "
                  << bm.record.best_val_loss << " (" << to_string(bm.provenance) << ", "
                  << bm.training_samples << " samples)\n";
    return 0;
}

int cmd_eval(Options& opt, SubCtx& ctx) {
    if (opt.bundle.empty()) throw ConfigError("eval requires --bundle <dir>");
    if (opt.data_path.empty()) throw ConfigError("eval requires --data <dataset.csv>");
    const Dataset ds = load_dataset(opt.data_path);
    opt.problem = ds.problem;
    const ProblemSpec problem = problem_by_name(ds.problem);
    const SimulatorHandle sim = resolve_simulator(opt, problem);
    const MixtureManifoldModel model = load_bundle(opt.bundle);
    if (model.problem != ds.problem)
        throw ConfigError("bundle problem '" + model.problem + "' does not match dataset '" +
                          ds.problem + "'");
    const Matrixf test_y = ds.y_of(Split::Test);

    const fs::path dir = resolve_out_dir(opt, "eval");
    write_config_echo(ctx, opt, dir);

    const GradientSearchSettings gs{opt.restarts, opt.steps, opt.na_lr, opt.gamma};

    if (opt.time_flag) {
        // Steady-state inference timing over opt.time_queries queries,
        // cycling the test split as the query stream.
        Matrixf queries(opt.time_queries, test_y.cols());
        if (test_y.rows() == 0) throw ConfigError("eval: empty test split");
        for (int i = 0; i < opt.time_queries; ++i)
            for (std::size_t c = 0; c < test_y.cols(); ++c)
                queries(i, c) = test_y(i % test_y.rows(), c);
        const TimingResult timing =
            opt.na ? time_na_inference(model.forward, problem, queries, gs, opt.seed, true)
                   : time_mmn_inference(model, queries, true);
        write_timing_json(timing, (dir / "timing.json").string());
        std::cout << "timing: batched " << timing.batched_s << " s, sequential "
                  << timing.sequential_s << " s for " << timing.n_queries << " queries\n";
        return 0;
    }

    const EvalReport report =
        opt.na ? evaluate_na(model.forward, problem, test_y, sim, opt.t_max, gs, opt.seed)
               : evaluate_mmn(model, test_y, sim, opt.t_max);
    write_report_csv(report, (dir / "report.csv").string());
    write_summary_csv(report, (dir / "summary.csv").string());
    std::cout << "model: " << report.model_id << "\n";
    for (int t = 1; t <= report.t_max; ++t)
        std::cout << "mean resim error, T=" << t << ": " << report.mean_resim[t - 1] << "\n";
    return 0;
}

int cmd_ablate(Options& opt, SubCtx& ctx) {
    if (opt.sweep != "k" && opt.sweep != "aug")
        throw ConfigError("--sweep expects k|aug");
    if (opt.bundle.empty()) throw ConfigError("ablate requires --bundle <dir>");
    if (opt.data_path.empty()) throw ConfigError("ablate requires --data <dataset.csv>");
    const Dataset ds = load_dataset(opt.data_path);
    opt.problem = ds.problem;
    const ProblemSpec problem = problem_by_name(ds.problem);
    const SimulatorHandle sim = resolve_simulator(opt, problem);
    const MixtureManifoldModel model = load_bundle(opt.bundle);
    const Profile prof = profile_by_name(opt.profile);
    const TrainSettings ts = resolve_train_settings(opt, prof);

    const fs::path dir = resolve_out_dir(opt, "ablate");
    write_config_echo(ctx, opt, dir);

    if (opt.sweep == "k") {
        const int max_k = opt.max_k > 0 ? opt.max_k : model.manifold_count();
        std::vector<ManifoldSweepPoint> points;
        if (opt.nested) {
            points = ablate_manifold_count(model, ds.y_of(Split::Test), sim, max_k);
        } else {
            // Alternative mode: retrain an independent pool per manifold count.
            const std::vector<int> hidden =
                opt.hidden_csv.empty() ? profile_hidden(opt.profile, problem)
                                       : parse_csv_list<int>(opt.hidden_csv, "--hidden");
            const NetworkSpec bwd_spec = make_spec(problem.dim_y, problem.dim_x, hidden);
            const long n_prime = opt.n_prime > 0 ? opt.n_prime : prof.n_prime;
            double base = 0.0;
            for (int k = 1; k <= max_k; ++k) {
                const MixtureManifoldModel trained = train_mmn(
                    model.forward, problem, k, static_cast<std::size_t>(n_prime), bwd_spec,
                    opt.gamma, ts, derive_seed(opt.seed, 0x500 + k));
                const double v =
                    evaluate_mmn(trained, ds.y_of(Split::Test), sim, 1).mean_resim[0];
                if (k == 1) base = v;
                points.push_back({k, v, v / base});
            }
        }
        write_manifold_sweep_csv(points, (dir / "k_sweep.csv").string());
        for (const auto& p : points)
            std::cout << "K=" << p.k << ": mean resim " << p.mean_resim_t1 << " (normalized "
                      << p.normalized << ")\n";
        return 0;
    }

    const auto ratios = parse_csv_list<double>(opt.ratios_csv, "--ratios");
    const std::vector<int> hidden = opt.hidden_csv.empty()
                                        ? profile_hidden(opt.profile, problem)
                                        : parse_csv_list<int>(opt.hidden_csv, "--hidden");
    const NetworkSpec bwd_spec = make_spec(problem.dim_y, problem.dim_x, hidden);
    const AugmentationSweep sweep = ablate_augmentation(
        model.forward, problem, ds, ratios, bwd_spec, opt.gamma, ts, sim, opt.seed);
    write_augmentation_sweep_csv(sweep, (dir / "aug_sweep.csv").string());
    for (const auto& p : sweep.points)
        std::cout << "ratio " << p.ratio << " (" << p.n_generated << " samples): mean resim "
                  << p.mean_resim_t1 << " (relative " << p.relative << ")\n";
    if (std::isnan(sweep.crossover_ratio))
        std::cout << "crossover: none within the sampled ratios\n";
    else
        std::cout << "crossover: relative error < 1 first reached at ratio "
                  << sweep.crossover_ratio << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// Option registration. Every option is recorded under its config key so the
// config file layer can tell command-line values from defaults.
// ---------------------------------------------------------------------------

template <typename T>
CLI::Option* reg(SubCtx& ctx, Options& opt, const std::string& key, T& var,
                 const std::string& desc) {
    (void)opt;
    CLI::Option* o = ctx.sub->add_option("--" + key, var, desc);
    ctx.cli_opts[key] = o;
    ctx.keys.push_back(key);
    return o;
}

CLI::Option* reg_flag(SubCtx& ctx, const std::string& key, bool& var, const std::string& desc) {
    CLI::Option* o = ctx.sub->add_flag("--" + key, var, desc);
    ctx.cli_opts[key] = o;
    ctx.keys.push_back(key);
    return o;
}

void add_common(SubCtx& ctx, Options& opt) {
    ctx.sub->add_option("--config", ctx.config_path,
                        "key=value config file; command-line flags take precedence");
    reg(ctx, opt, "out", opt.out_root, "output root (default: $MMN_OUT_ROOT or ./runs)");
    reg(ctx, opt, "run-id", opt.run_id, "run directory name under the output root");
    reg(ctx, opt, "profile", opt.profile, "settings profile: desk|paper")
        ->check(CLI::IsMember({"desk", "paper"}));
    reg(ctx, opt, "seed", opt.seed, "master seed");
}

void add_external(SubCtx& ctx, Options& opt) {
    reg(ctx, opt, "external-cmd", opt.external_cmd, "external simulator command");
    reg(ctx, opt, "exchange-dir", opt.exchange_dir, "external simulator exchange directory");
}

void add_train_settings(SubCtx& ctx, Options& opt) {
    reg(ctx, opt, "gamma", opt.gamma, "boundary penalty weight");
    reg(ctx, opt, "epochs", opt.epochs, "training epochs (default: profile)");
    reg(ctx, opt, "batch", opt.batch, "batch size (default: profile)");
    reg(ctx, opt, "lr", opt.lr, "learning rate (default: profile)");
    reg(ctx, opt, "hidden", opt.hidden_csv, "hidden widths, comma list (default: profile)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mixture-manifold inverse-problem toolkit"};
    app.require_subcommand(1);
    Options opt;

    SubCtx gen;
    gen.sub = app.add_subcommand("gen-data", "sample a benchmark dataset");
    add_common(gen, opt);
    reg(gen, opt, "problem", opt.problem, "sine|arm|shell");
    reg(gen, opt, "sizes", opt.sizes_csv, "train,val,test row counts (default: profile)");
    add_external(gen, opt);

    SubCtx train;
    train.sub = app.add_subcommand("train", "train forward surrogate + inverse manifolds");
    add_common(train, opt);
    reg(train, opt, "data", opt.data_path, "dataset CSV from gen-data");
    reg(train, opt, "k", opt.k, "number of inverse manifolds (default: profile)");
    reg(train, opt, "n-prime", opt.n_prime, "generated samples per manifold (default: profile)");
    add_train_settings(train, opt);
    reg(train, opt, "augment", opt.augment,
        "on: train manifolds on generated data; off: real data")
        ->check(CLI::IsMember({"on", "off"}));
    reg(train, opt, "forward-from", opt.forward_from,
        "reuse the frozen forward model from an existing bundle");

    SubCtx eval_cmd;
    eval_cmd.sub = app.add_subcommand("eval", "evaluate a trained bundle");
    add_common(eval_cmd, opt);
    reg(eval_cmd, opt, "bundle", opt.bundle, "bundle directory from train");
    reg(eval_cmd, opt, "data", opt.data_path, "dataset CSV (test split = queries)");
    reg(eval_cmd, opt, "t-max", opt.t_max, "largest proposal budget T");
    reg_flag(eval_cmd, "na", opt.na, "evaluate the gradient-descent baseline instead");
    reg(eval_cmd, opt, "restarts", opt.restarts, "baseline restarts");
    reg(eval_cmd, opt, "steps", opt.steps, "baseline descent steps");
    reg(eval_cmd, opt, "na-lr", opt.na_lr, "baseline descent learning rate");
    reg(eval_cmd, opt, "gamma", opt.gamma, "baseline boundary weight");
    reg_flag(eval_cmd, "time", opt.time_flag, "measure inference timing instead of errors");
    reg(eval_cmd, opt, "time-queries", opt.time_queries, "queries for --time");
    add_external(eval_cmd, opt);

    SubCtx ablate;
    ablate.sub = app.add_subcommand("ablate", "manifold-count / augmentation sweeps");
    add_common(ablate, opt);
    reg(ablate, opt, "sweep", opt.sweep, "k|aug")->check(CLI::IsMember({"k", "aug"}));
    reg(ablate, opt, "bundle", opt.bundle, "trained bundle (manifold pool / forward model)");
    reg(ablate, opt, "data", opt.data_path, "dataset CSV");
    reg(ablate, opt, "max-k", opt.max_k, "largest manifold count (default: bundle size)");
    reg(ablate, opt, "ratios", opt.ratios_csv, "generated/real ratios for --sweep aug");
    {
        CLI::Option* o = ablate.sub->add_flag("!--no-nested", opt.nested,
                                              "retrain an independent pool per K");
        ablate.cli_opts["nested"] = o;
        ablate.keys.push_back("nested");
    }
    reg(ablate, opt, "n-prime", opt.n_prime, "pool size for --no-nested (default: profile)");
    add_train_settings(ablate, opt);
    add_external(ablate, opt);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        SubCtx* active = nullptr;
        if (gen.sub->parsed()) active = &gen;
        else if (train.sub->parsed()) active = &train;
        else if (eval_cmd.sub->parsed()) active = &eval_cmd;
        else if (ablate.sub->parsed()) active = &ablate;
        if (!active) return 2;
        apply_config_file(*active, opt);
        if (active == &gen) return cmd_gen_data(opt, gen);
        if (active == &train) return cmd_train(opt, train);
        if (active == &eval_cmd) return cmd_eval(opt, eval_cmd);
        return cmd_ablate(opt, ablate);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
