// hmcnn: dataset generation, training runs, embedding demo, bound calculators.
//
// Exit codes: 0 success, 2 usage error, 1 runtime failure.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hmcnn/hmcnn.hpp"

namespace fs = std::filesystem;
using namespace hmcnn;
using ojson = nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "0.1.0";

struct usage_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string num(double v)
{
    if (std::isnan(v)) return "";
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

std::string join(const std::vector<int>& v, char sep = ',')
{
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += sep;
        s += std::to_string(v[i]);
    }
    return s;
}

void ensure_dir(const std::string& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw std::runtime_error("cannot create output directory " + dir);
}

void write_text(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path);
}

// ---------------------------------------------------------------- generate

struct GenerateArgs {
    int task = 1;
    std::size_t n = 1000;
    std::size_t N = 1000;
    std::uint64_t seed = 0;
    std::string out;
    int pgm = 0;
};

int cmd_generate(const GenerateArgs& a)
{
    ensure_dir(a.out);
    TaskConfig train_cfg;
    train_cfg.task = a.task;
    train_cfg.n = a.n;
    train_cfg.seed = derive_seed(a.seed, 0);
    TaskConfig test_cfg = train_cfg;
    test_cfg.n = a.N;
    test_cfg.seed = derive_seed(a.seed, 1);

    const LabeledDataset train = gen_task(train_cfg);
    const LabeledDataset test = gen_task(test_cfg);
    save_dataset(train, (fs::path(a.out) / "train.csv").string());
    save_dataset(test, (fs::path(a.out) / "test.csv").string());
    if (a.pgm > 0) {
        const fs::path dir = fs::path(a.out) / "pgm";
        ensure_dir(dir.string());
        for (std::size_t k = 0; k < std::min<std::size_t>(a.pgm, train.size()); ++k) {
            std::ostringstream name;
            name << "train_" << std::setw(5) << std::setfill('0') << k << "_y" << train.label(k) << ".pgm";
            save_pgm(train.image(k), (dir / name.str()).string());
        }
    }

    ojson m;
    m["tool"] = "hmcnn";
    m["version"] = kVersion;
    m["command"] = "generate";
    m["config"] = {{"task", a.task},
                   {"n", a.n},
                   {"N", a.N},
                   {"seed", a.seed},
                   {"d1", train_cfg.d1},
                   {"d2", train_cfg.d2},
                   {"area_lo", train_cfg.area_lo},
                   {"area_hi", train_cfg.area_hi},
                   {"rotation", "uniform [0, 2pi)"},
                   {"max_overlap", train_cfg.max_overlap},
                   {"max_retries", train_cfg.max_retries},
                   {"pgm", a.pgm}};
    m["derived_seeds"] = {{"train", train_cfg.seed}, {"test", test_cfg.seed}};
    m["files"] = {{"train", "train.csv"}, {"test", "test.csv"}};
    m["label_frequency"] = {{"train", train.label_frequency()}, {"test", test.label_frequency()}};
    write_text((fs::path(a.out) / "manifest.json").string(), m.dump(2) + "\n");
    std::cout << "wrote " << a.n << " training and " << a.N << " test images to " << a.out << "\n"
              << "label frequency: train " << num(train.label_frequency()) << ", test "
              << num(test.label_frequency()) << "\n";
    return 0;
}

// ------------------------------------------------------------------- train

struct TrainArgs {
    std::string train;
    std::string test;
    std::string grid = "desk";
    std::vector<std::uint64_t> seeds{0};
    int epochs = 200;
    double lr = 1e-3;
    int batch = 32;
    double c4 = 1.0;
    int task = 0;
    std::string out;
    bool save_model = false;
};

ArchitectureGrid grid_preset(const std::string& name)
{
    if (name == "desk") return ArchitectureGrid::desk();
    if (name == "full") return ArchitectureGrid::full();
    if (name == "tiny") return {{2}, {1}, {1}, {2}, {5}};
    throw usage_error("unknown grid preset " + name);
}

// Task number from a manifest.json next to the training file, 0 if unknown.
int task_from_manifest(const std::string& train_path)
{
    const fs::path m = fs::path(train_path).parent_path() / "manifest.json";
    if (!fs::exists(m)) return 0;
    try {
        return load_json(m.string()).at("config").at("task").get<int>();
    } catch (const std::exception&) {
        return 0;
    }
}

int cmd_train(TrainArgs a, bool deterministic)
{
    if (a.task == 0) a.task = task_from_manifest(a.train);
    TrainConfig base;
    base.grid = grid_preset(a.grid);
    base.epochs = a.epochs;
    base.step = a.lr;
    base.batch = a.batch;
    base.c4 = a.c4;
    base.validate();

    const LabeledDataset train = load_dataset(a.train);
    const LabeledDataset test = load_dataset(a.test);
    if (train.d1() != test.d1() || train.d2() != test.d2())
        throw std::runtime_error("training and test images differ in size");
    ensure_dir(a.out);

    const std::set<std::uint64_t> unique_seeds(a.seeds.begin(), a.seeds.end());
    const std::vector<std::uint64_t> seeds(unique_seeds.begin(), unique_seeds.end());

    std::ostringstream csv;
    csv << "# hmcnn " << kVersion << "\n";
    csv << "# config: train=" << a.train << " test=" << a.test << " grid=" << a.grid << " epochs=" << a.epochs
        << " lr=" << num(a.lr) << " batch=" << a.batch << " c4=" << num(a.c4) << " adam=(0.9,0.999,1e-8)"
        << " seeds=";
    for (std::size_t i = 0; i < seeds.size(); ++i) csv << (i ? ";" : "") << seeds[i];
    csv << " deterministic=" << (deterministic ? 1 : 0) << "\n";
    csv << "kind,task,n,seed,grid_point,parameters,validation_risk,test_risk,iqr,wall_time_s\n";

    const auto row = [&](const std::string& kind, const std::string& seed, const std::string& point,
                         const std::string& params, double vr, double tr, double iqr, double wall) {
        csv << kind << ',' << a.task << ',' << train.size() << ',' << seed << ',' << point << ',' << params << ','
            << num(vr) << ',' << num(tr) << ',' << num(iqr) << ',' << num(deterministic && !std::isnan(wall) ? 0.0 : wall)
            << '\n';
    };
    const double nan = std::numeric_limits<double>::quiet_NaN();

    std::vector<double> selected_risks, baseline_risks;
    for (std::uint64_t seed : seeds) {
        TrainConfig cfg = base;
        cfg.seed = seed;
        const auto t0 = std::chrono::steady_clock::now();
        std::cerr << "seed " << seed << ": model selection over " << cfg.grid.points().size() << " grid points\n";
        const Selection sel = model_select(train, cfg, [](const GridResult& r) {
            std::cerr << "  " << r.point.label() << " params=" << r.parameters
                      << (r.admissible ? " validation risk=" + num(r.validation_risk) : std::string(" (over cap)"))
                      << "\n";
        });
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        for (const auto& r : sel.grid)
            row("grid", std::to_string(seed), r.point.label(), std::to_string(r.parameters),
                r.admissible ? r.validation_risk : nan, nan, nan, nan);
        const double risk = empirical_risk(sel.estimate, test);
        const double base_risk = empirical_risk(constant_baseline(train), test);
        selected_risks.push_back(risk);
        baseline_risks.push_back(base_risk);
        const auto& w = sel.grid[sel.winner];
        row("selected", std::to_string(seed), w.point.label(), std::to_string(w.parameters), w.validation_risk, risk,
            nan, wall);
        row("baseline", std::to_string(seed), "constant", "1", nan, base_risk, nan, nan);
        std::cerr << "  selected " << w.point.label() << " test risk " << num(risk) << " (baseline "
                  << num(base_risk) << ")\n";
        if (a.save_model) {
            json j = to_json(sel.estimate.net);
            j["meta"] = {{"tool", "hmcnn"},      {"version", kVersion},  {"seed", seed},
                         {"grid_point", w.point.label()}, {"truncation", sel.estimate.beta},
                         {"epochs", a.epochs},   {"lr", a.lr},           {"batch", a.batch}};
            save_json(j, (fs::path(a.out) / ("model_seed" + std::to_string(seed) + ".json")).string());
        }
    }
    const RiskSummary s = summarize(selected_risks);
    const RiskSummary b = summarize(baseline_risks);
    row("summary", "all", "selected", "", nan, s.median, s.iqr, nan);
    row("summary", "all", "constant", "", nan, b.median, b.iqr, nan);
    write_text((fs::path(a.out) / "results.csv").string(), csv.str());
    std::cout << "median test risk " << num(s.median) << " (IQR " << num(s.iqr) << "), baseline " << num(b.median)
              << "\n"
              << "wrote " << (fs::path(a.out) / "results.csv").string() << "\n";
    return 0;
}

// -------------------------------------------------------------- embed-demo

struct EmbedArgs {
    int l = 2;
    int L_net = 1;
    int r_net = 5;
    int trials = 10;
    std::uint64_t seed = 0;
    bool high_precision = false;
    std::string out;
};

int cmd_embed_demo(const EmbedArgs& a)
{
    const EmbeddingPlan plan = plan_embedding(a.l, a.L_net, a.r_net);
    Rng rng{a.seed};
    const DenseHierTree tree = make_dense_tree(a.l, a.L_net, a.r_net, rng);
    const HierTree oracle = tree.to_tree();
    const ConvNet net = build_cnn_from_hierarchy(tree, plan);
    double max_dev = 0.0;
    long double max_dev_ext = 0.0L;
    for (int k = 0; k < a.trials; ++k) {
        const int side = 1 << a.l;
        const int d1 = side + (rng.below(2) ? 3 : 0);
        const int d2 = side + (rng.below(2) ? 3 : 0);
        std::vector<double> px(static_cast<std::size_t>(d1) * d2);
        for (auto& v : px) v = rng.uniform();
        const Image img{d1, d2, std::move(px)};
        max_dev = std::max(max_dev, std::abs(conv_forward(net, img) - eval_maxpool(oracle, img)));
        if (a.high_precision)
            max_dev_ext = std::max(max_dev_ext, std::abs(conv_forward<long double>(net, img) -
                                                         eval_maxpool_dense<long double>(tree, img)));
    }
    std::ostringstream rep;
    rep << "hmcnn " << kVersion << " embed-demo\n"
        << "seed=" << a.seed << "\n"
        << "l=" << plan.l << "\n"
        << "L_net=" << plan.L_net << "\n"
        << "r_net=" << plan.r_net << "\n"
        << "l_net=" << plan.l_net << "\n"
        << "channel_budget=" << plan.channels << "\n"
        << "filter_sizes=" << join(plan.M) << "\n"
        << "parameters=" << net.parameter_count() << "\n"
        << "trials=" << a.trials << "\n"
        << "max_deviation=" << num(max_dev) << "\n";
    if (a.high_precision) rep << "max_deviation_extended=" << num(static_cast<double>(max_dev_ext)) << "\n";
    std::cout << rep.str();
    if (!a.out.empty()) write_text(a.out, rep.str());
    return 0;
}

// ------------------------------------------------------------------ bounds

struct BoundsArgs {
    bool rate_mode = false;
    bool schedule_mode = false;
    bool csv = false;
    bool squared = false;
    int t = 0;
    std::vector<int> k1, M, k2;
    int d1 = 32, d2 = 32;
    std::vector<double> n;
    double eps = 0.1;
    double c4 = 1.0;
    double p1 = 1.0, p2 = 1.0;
    int dstar = 1;
    int l = 1;
    double c1 = 1.0;
    int c2 = 1;
    std::string out;
};

int cmd_bounds(const BoundsArgs& a, const CLI::App& sub)
{
    std::ostringstream o;
    const char* sep = a.csv ? "," : " ";
    if (a.rate_mode) {
        if (a.n.empty() || !sub.count("--p1") || !sub.count("--p2") || !sub.count("--dstar"))
            throw usage_error("--rate needs --n, --p1, --p2 and --dstar");
        o << "n" << sep << "rate\n";
        for (double n : a.n) o << num(n) << sep << num(rate(n, a.p1, a.p2, a.dstar, a.squared)) << "\n";
    } else if (a.schedule_mode) {
        if (a.n.size() != 1 || !sub.count("--p1") || !sub.count("--p2") || !sub.count("--dstar") || !sub.count("--l"))
            throw usage_error("--schedule needs one --n and --p1, --p2, --dstar, --l");
        const ArchSchedule s = theorem1_schedule(a.n[0], a.p1, a.p2, a.dstar, a.l, a.c1, a.c2);
        const auto field = [&](const std::string& k, const std::string& v) {
            if (a.csv) o << k << "," << v << "\n";
            else o << std::left << std::setw(10) << k << v << "\n";
        };
        field("L_n", std::to_string(s.L_n));
        field("L1", std::to_string(s.L1));
        field("L2", std::to_string(s.L2));
        field("t", std::to_string(s.t));
        field("k1", std::to_string(s.k1.front()));
        field("k2", std::to_string(s.k2.front()));
        field("M", join(s.M, a.csv ? ';' : ','));
        field("rate", num(rate(a.n[0], a.p1, a.p2, a.dstar)));
    } else {
        if (a.t < 1 || a.k1.empty() || a.M.empty())
            throw usage_error("weight counts need --t, --k1 and --M");
        if (a.k1.size() != a.M.size()) throw usage_error("--k1 and --M need the same number of entries");
        ComplexityReport r = weight_count(a.t, a.k1, a.M, a.k2);
        const bool cover = !a.n.empty();
        if (cover) r = complexity_report(a.t, a.k1, a.M, a.k2, a.d1, a.d2, a.n[0], a.eps, a.c4);
        else r.vc = vc_bound(a.t, static_cast<long long>(a.k1.size()), static_cast<long long>(a.k2.size()),
                             r.k_max, r.M_max, a.d1, a.d2);
        const auto field = [&](const std::string& k, const std::string& v) {
            if (a.csv) o << k << "," << v << "\n";
            else o << std::left << std::setw(14) << k << v << "\n";
        };
        for (std::size_t i = 0; i < r.W_r.size(); ++i) field("W_" + std::to_string(i + 1), std::to_string(r.W_r[i]));
        field("W", std::to_string(r.W));
        field("k_max", std::to_string(r.k_max));
        field("M_max", std::to_string(r.M_max));
        field("vc_bound", num(r.vc));
        if (cover) field("log_covering", num(r.log_covering));
    }
    std::cout << o.str();
    if (!a.out.empty()) write_text(a.out, o.str());
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Hierarchical max-pooling CNN toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string("hmcnn ") + kVersion);
    bool deterministic = false;
    app.add_flag("--deterministic", deterministic, "Reproducible output files (wall times written as 0)");

    GenerateArgs ga;
    auto* gen = app.add_subcommand("generate", "Generate train and test data sets");
    gen->add_option("--task", ga.task, "Task (1: circle detection, 2: equal shapes)")->required()->check(CLI::Range(1, 2));
    gen->add_option("--n", ga.n, "Training set size")->required()->check(CLI::PositiveNumber);
    gen->add_option("--N", ga.N, "Test set size")->required()->check(CLI::PositiveNumber);
    gen->add_option("--seed", ga.seed, "Seed");
    gen->add_option("--out", ga.out, "Output directory")->required();
    gen->add_option("--pgm", ga.pgm, "Also export the first K training images as PGM")->check(CLI::NonNegativeNumber);
    gen->add_flag("--deterministic", deterministic);

    TrainArgs ta;
    auto* tr = app.add_subcommand("train", "Model selection and test risk");
    tr->add_option("--train", ta.train, "Training CSV")->required()->check(CLI::ExistingFile);
    tr->add_option("--test", ta.test, "Test CSV")->required()->check(CLI::ExistingFile);
    tr->add_option("--grid", ta.grid, "Grid preset")->check(CLI::IsMember({"desk", "full", "tiny"}));
    tr->add_option("--seed", ta.seeds, "Seed(s); repeat or list for several runs")->delimiter(',');
    tr->add_option("--epochs", ta.epochs, "Epochs")->check(CLI::PositiveNumber);
    tr->add_option("--lr", ta.lr, "Adam step size")->check(CLI::PositiveNumber);
    tr->add_option("--batch", ta.batch, "Mini-batch size")->check(CLI::PositiveNumber);
    tr->add_option("--c4", ta.c4, "Truncation constant")->check(CLI::PositiveNumber);
    tr->add_option("--task", ta.task, "Task number recorded in the results");
    tr->add_option("--out", ta.out, "Output directory")->required();
    tr->add_flag("--save-model", ta.save_model, "Write the selected networks as JSON");
    tr->add_flag("--deterministic", deterministic);

    EmbedArgs ea;
    auto* em = app.add_subcommand("embed-demo", "Build a CNN from a random hierarchical model and compare");
    em->add_option("--l", ea.l, "Level")->check(CLI::Range(1, 4));
    em->add_option("--L-net", ea.L_net, "Hidden layers per node network")->check(CLI::PositiveNumber);
    em->add_option("--r-net", ea.r_net, "Neurons per hidden layer")->check(CLI::PositiveNumber);
    em->add_option("--trials", ea.trials, "Random images")->check(CLI::PositiveNumber);
    em->add_option("--seed", ea.seed, "Seed");
    em->add_flag("--high-precision", ea.high_precision, "Also compare in extended precision");
    em->add_option("--out", ea.out, "Report file");
    em->add_flag("--deterministic", deterministic);

    BoundsArgs ba;
    auto* bo = app.add_subcommand("bounds", "Weight counts, complexity bounds, schedule and rate");
    bo->add_flag("--rate", ba.rate_mode, "Rate for each --n");
    bo->add_flag("--schedule", ba.schedule_mode, "Architecture schedule for --n");
    bo->add_flag("--squared", ba.squared, "With --rate: squared (L2) rate");
    bo->add_flag("--csv", ba.csv, "CSV output");
    bo->add_option("--t", ba.t, "Number of convolutional parts")->check(CLI::PositiveNumber);
    bo->add_option("--k1", ba.k1, "Channels per convolutional layer")->delimiter(',');
    bo->add_option("--M", ba.M, "Filter size per convolutional layer")->delimiter(',');
    bo->add_option("--k2", ba.k2, "Neurons per dense layer")->delimiter(',');
    bo->add_option("--d1", ba.d1, "Image rows")->check(CLI::PositiveNumber);
    bo->add_option("--d2", ba.d2, "Image columns")->check(CLI::PositiveNumber);
    bo->add_option("--n", ba.n, "Sample size(s)")->delimiter(',');
    bo->add_option("--eps", ba.eps, "Covering radius");
    bo->add_option("--c4", ba.c4, "Truncation constant");
    bo->add_option("--p1", ba.p1, "Smoothness of the node functions");
    bo->add_option("--p2", ba.p2, "Smoothness of the outer function");
    bo->add_option("--dstar", ba.dstar, "Order d*")->check(CLI::PositiveNumber);
    bo->add_option("--l", ba.l, "Level")->check(CLI::PositiveNumber);
    bo->add_option("--c1", ba.c1, "Schedule constant c1");
    bo->add_option("--c2", ba.c2, "Schedule constant c2");
    bo->add_option("--out", ba.out, "Report file");
    bo->add_flag("--deterministic", deterministic);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*gen) return cmd_generate(ga);
        if (*tr) return cmd_train(ta, deterministic);
        if (*em) return cmd_embed_demo(ea);
        if (*bo) return cmd_bounds(ba, *bo);
    } catch (const usage_error& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const invalid_input& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
