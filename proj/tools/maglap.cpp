#include <CLI11.hpp>
#include <json.hpp>

#include <Eigen/Eigenvalues>
#include <boost/version.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <numeric>
#include <set>
#include <sstream>

#include "maglap/errors.hpp"
#include "maglap/experiment.hpp"
#include "maglap/leverage.hpp"
#include "maglap/oracle.hpp"
#include "maglap/rng.hpp"
#include "maglap/sampler.hpp"
#include "maglap/solvers.hpp"
#include "maglap/sparsifier.hpp"
#include "maglap/syncrank.hpp"

#ifndef MAGLAP_VERSION
#define MAGLAP_VERSION "0.0.0"
#endif

using namespace maglap;
using json = nlohmann::ordered_json;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

// Stream purposes below the master seed.
constexpr std::uint64_t kSampleStream = 0x73616d70;
constexpr std::uint64_t kLsStream = 0x6c73;
constexpr std::uint64_t kIidStream = 0x696964;
constexpr std::uint64_t kRhsStream = 0x726873;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Run {
    ExperimentConfig cfg;
    fs::path out;
    Clock::time_point start = Clock::now();
    double sampler_seconds = 0.0;

    fs::path path(const std::string& name) const { return out / name; }

    std::ofstream open(const std::string& name) const
    {
        std::ofstream f(path(name));
        if (!f) {
            throw InvalidInput("cannot write '" + path(name).string() + "'");
        }
        f.precision(17);
        return f;
    }

    json meta() const
    {
        json m;
        m["tool"] = "maglap";
        m["version"] = MAGLAP_VERSION;
        m["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                     std::to_string(EIGEN_MINOR_VERSION);
        m["boost"] = BOOST_LIB_VERSION;
        m["command"] = cfg.command;
        m["seed"] = cfg.seed;
        m["config"] = "config.txt";
        return m;
    }

    void write_json(const std::string& name, const json& j) const { open(name) << j.dump(2) << '\n'; }

    // Wall-clock data lives apart from the results so those stay byte-identical across reruns.
    void finish() const
    {
        json t;
        t["command"] = cfg.command;
        t["clock"] = "steady_clock";
        t["wall_seconds"] = seconds_since(start);
        t["sampler_seconds"] = sampler_seconds;
        write_json("timing.json", t);
    }
};

void header(std::ostream& out, std::initializer_list<std::string> lines)
{
    for (const auto& l : lines) {
        out << "# " << l << '\n';
    }
}

json describe(const GraphSource& src)
{
    const ConnectionGraph& g = src.graph;
    json j;
    j["source"] = src.description;
    j["nodes"] = g.node_count();
    j["edges"] = g.edge_count();
    j["components"] = g.component_count();
    j["nontrivial_connection"] = g.nontrivial_connection();
    j["unit_weights"] = g.unit_weights();
    return j;
}

GraphSource load_graph(const Run& run)
{
    if (run.cfg.graph.empty()) {
        throw InvalidInput(run.cfg.command + " needs --graph (a generator spec such as mun:n=200,p=0.1,eta=0.1 "
                                             "or file:<edge list>)");
    }
    return make_graph(run.cfg.graph, run.cfg.seed);
}

ConnectionGraph laplacian_graph(const Run& run, const ConnectionGraph& g)
{
    return run.cfg.laplacian == "combinatorial" ? without_connection(g) : g;
}

json summary(const std::vector<double>& xs)
{
    json j;
    if (xs.empty()) {
        return j;
    }
    j["min"] = *std::min_element(xs.begin(), xs.end());
    j["max"] = *std::max_element(xs.begin(), xs.end());
    j["mean"] = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    return j;
}

// Sampler mode -> (graph the DPP lives on, effective q).
struct ModeSetup {
    ConnectionGraph graph;
    double q = 0.0;
};

ModeSetup mode_setup(const std::string& mode, const ConnectionGraph& g, double q)
{
    const ConnectionGraph unit = with_unit_weights(g);
    if (mode == "st") {
        return {without_connection(unit), 0.0};
    }
    if (mode == "crsf") {
        return {unit, 0.0};
    }
    if (!(q > 0.0)) {
        throw InvalidInput("sampler " + mode + " needs q > 0 (use crsf or st for q = 0)");
    }
    if (mode == "sf") {
        return {without_connection(unit), q};
    }
    if (mode == "mtsf") {
        return {unit, q};
    }
    throw InvalidInput("sampler '" + mode + "' draws no forests");
}

std::vector<Mtsf> draw_forests(Run& run, const std::string& mode, const ModeSetup& setup, int count,
                               std::uint64_t seed, WalkStats* stats)
{
    const auto t0 = Clock::now();
    const WeightMode weights = run.cfg.weights == "capped" ? WeightMode::capped : WeightMode::exact;
    std::vector<Mtsf> out = mode == "st" ? sample_spanning_trees(setup.graph, count, seed, stats)
                                         : sample_batch(setup.graph, setup.q, count, {weights}, seed, stats,
                                                        run.cfg.threads);
    run.sampler_seconds += seconds_since(t0);
    return out;
}

LeverageScores compute_ls(LsMethod method, const ConnectionGraph& g, double q, std::uint64_t seed)
{
    switch (method) {
    case LsMethod::exact:
        return exact_ls(g, q);
    case LsMethod::jl:
        return jl_ls(g, q, derive_key(seed, kLsStream));
    case LsMethod::uniform:
        break;
    }
    LeverageScores ls;
    ls.method = LsMethod::uniform;
    ls.q = q;
    ls.values.assign(static_cast<std::size_t>(g.edge_count()), 1.0);
    return ls;
}

// d_eff = Σ λ/(λ+q) and κ = λ_max/(λ_max+q) from a dense spectrum of Δ.
std::pair<double, double> dpp_constants(const ConnectionGraph& g, double q)
{
    if (g.node_count() > kExactLeverageMaxNodes) {
        throw InvalidInput("the bound needs d_eff from a dense spectrum; n exceeds " +
                           std::to_string(kExactLeverageMaxNodes));
    }
    const Eigen::VectorXd lambda = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(dense_laplacian(g, 0.0),
                                                                                    Eigen::EigenvaluesOnly)
                                       .eigenvalues();
    double d_eff = 0.0;
    double kappa = 0.0;
    for (double l : lambda) {
        const double k = l + q > 0.0 ? std::max(l, 0.0) / (l + q) : 0.0;
        d_eff += k;
        kappa = std::max(kappa, k);
    }
    return {d_eff, kappa};
}

Vector unit_rhs(int n, std::uint64_t seed)
{
    CounterRng rng(derive_key(seed, kRhsStream));
    Vector b(n);
    for (int i = 0; i < n; ++i) {
        b(i) = std::polar(1.0, kTwoPi * rng.uniform());
    }
    return b / b.norm();
}

// ---------------------------------------------------------------- subcommands

void run_gen(Run& run)
{
    const GraphSource src = load_graph(run);
    {
        auto f = run.open("graph.edges");
        write_edge_list(f, src.graph, "u v weight angle; " + src.description + ", seed " + std::to_string(run.cfg.seed));
    }
    if (!src.ranking.empty()) {
        auto f = run.open("ranking.txt");
        header(f, {"node h(node); h is a permutation of 1..n, larger is better"});
        for (std::size_t u = 0; u < src.ranking.size(); ++u) {
            f << u << ' ' << src.ranking[u] << '\n';
        }
    }
    json m = run.meta();
    m["graph"] = describe(src);
    run.write_json("meta.json", m);
}

void run_sample(Run& run)
{
    const GraphSource src = load_graph(run);
    if (run.cfg.sampler == "iid") {
        throw InvalidInput("sample draws forests (st, sf, crsf, mtsf); i.i.d. edges are available in sparsify and precond");
    }
    const ModeSetup setup = mode_setup(run.cfg.sampler, src.graph, run.cfg.q);
    WalkStats stats;
    const auto forests = draw_forests(run, run.cfg.sampler, setup, run.cfg.replicates,
                                      derive_key(run.cfg.seed, kSampleStream), &stats);
    auto f = run.open("forests.txt");
    header(f, {"one sample per line: sorted edge ids of replicate 0, 1, ...",
               "sampler " + run.cfg.sampler + ", q " + format_double(setup.q)});
    json records = json::array();
    for (const Mtsf& F : forests) {
        for (std::size_t i = 0; i < F.edges.size(); ++i) {
            f << (i ? " " : "") << F.edges[i];
        }
        f << '\n';
        int capped = 0;
        for (const auto& c : F.cycles) {
            capped += c.capped;
        }
        records.push_back({{"edges", F.size()},
                           {"trees", F.tree_count()},
                           {"cycles", F.cycles.size()},
                           {"capped_cycles", capped},
                           {"importance_weight", F.importance_weight()}});
    }
    json m = run.meta();
    m["graph"] = describe(src);
    m["sampler"] = run.cfg.sampler;
    m["q"] = setup.q;
    m["weights"] = run.cfg.weights;
    m["replicates"] = run.cfg.replicates;
    m["walk"] = {{"steps", stats.steps},
                 {"cycles_popped", stats.cycles_popped},
                 {"cycles_accepted", stats.cycles_accepted},
                 {"bernoulli_draws", stats.bernoulli_draws}};
    m["samples"] = records;
    run.write_json("stats.json", m);
}

void run_ls(Run& run)
{
    const GraphSource src = load_graph(run);
    const ConnectionGraph g = laplacian_graph(run, src.graph);
    const LeverageScores ls = run.cfg.ls == LsMethod::uniform
                                  ? uniform_ls(g.node_count(), g.edge_count())
                                  : compute_ls(run.cfg.ls, g, run.cfg.q, run.cfg.seed);
    auto f = run.open("scores.txt");
    header(f, {"edge_id score", "method " + to_string(ls.method) + ", q " + format_double(run.cfg.q)});
    for (int e = 0; e < ls.edge_count(); ++e) {
        f << e << ' ' << ls.values[static_cast<std::size_t>(e)] << '\n';
    }
    json m = run.meta();
    m["graph"] = describe(src);
    m["method"] = to_string(ls.method);
    m["q"] = run.cfg.q;
    m["sum"] = ls.sum();
    m["sketch_width"] = ls.sketch_width;
    m["clipped_low"] = ls.clipped_low;
    m["clipped_high"] = ls.clipped_high;
    run.write_json("meta.json", m);
}

void run_sparsify(Run& run)
{
    const GraphSource src = load_graph(run);
    const ExperimentConfig& cfg = run.cfg;
    const ConnectionGraph g = laplacian_graph(run, src.graph);
    const bool iid = cfg.sampler == "iid";
    const ModeSetup setup = iid ? ModeSetup{with_unit_weights(g), cfg.q} : mode_setup(cfg.sampler, g, cfg.q);
    if (cfg.sampler == "st" && cfg.ls != LsMethod::uniform) {
        throw InvalidInput("spanning-tree batches are reweighted with ls = uniform");
    }
    json m = run.meta();
    m["graph"] = describe(src);
    m["sampler"] = cfg.sampler;
    m["q"] = setup.q;
    m["ls"] = to_string(cfg.ls);
    m["estimator"] = cfg.estimator;

    std::optional<std::pair<double, double>> constants;
    int t = cfg.batches.front();
    if (cfg.epsilon > 0.0) {
        constants = dpp_constants(setup.graph, setup.q);
        const std::int64_t bound = batch_size_bound(constants->first, constants->second, cfg.epsilon, cfg.delta);
        if (bound > 1'000'000) {
            throw InvalidInput("the batch bound asks for t = " + std::to_string(bound) + " samples; raise epsilon");
        }
        t = static_cast<int>(bound);
        m["bound"] = {{"epsilon", cfg.epsilon},
                      {"delta", cfg.delta},
                      {"d_eff", constants->first},
                      {"kappa", constants->second},
                      {"t", bound}};
    }
    m["t"] = t;

    const LeverageScores ls = compute_ls(cfg.ls, setup.graph, setup.q, cfg.seed);
    const std::uint64_t seed = derive_key(cfg.seed, kSampleStream);
    std::vector<std::pair<int, double>> coeff;
    std::size_t total = 0;
    if (iid) {
        const int draws_per_batch =
            cfg.ls == LsMethod::uniform ? g.node_count() : std::max(1, static_cast<int>(std::lround(ls.sum())));
        const int s = t * draws_per_batch;
        CounterRng rng(derive_key(seed, kIidStream));
        const auto t0 = Clock::now();
        const std::vector<int> draws = iid_edges(ls.values, s, rng);
        run.sampler_seconds += seconds_since(t0);
        std::map<int, int> count;
        for (int e : draws) {
            ++count[e];
        }
        const double total_score = std::accumulate(ls.values.begin(), ls.values.end(), 0.0);
        for (const auto& [e, c] : count) {
            coeff.emplace_back(e, c * total_score / (s * ls.values[static_cast<std::size_t>(e)]));
        }
        total = draws.size();
        m["draws"] = s;
    } else {
        WalkStats stats;
        auto forests = draw_forests(run, cfg.sampler, setup, t, seed, &stats);
        const EstimatorKind kind =
            cfg.estimator == "self-normalized" ? EstimatorKind::self_normalized : EstimatorKind::plain;
        const SparsifierBatch batch = make_batch(std::move(forests), ls, setup.q, kind);
        coeff = sparsifier_coefficients(batch, kind);
        total = batch.total_edges();
        m["importance_weights"] = summary(batch.importance);
        m["walk_steps"] = stats.steps;
        if (kind == EstimatorKind::self_normalized) {
            if (!constants && setup.graph.node_count() <= kExactLeverageMaxNodes) {
                constants = dpp_constants(setup.graph, setup.q);
            }
            if (constants) {
                const CltDiagnostic clt = clt_radius(batch, g.edge_count(), g.node_count(), constants->first);
                m["clt"] = {{"omega", clt.omega}, {"z", clt.z}, {"radius", clt.radius}};
            }
        }
    }

    std::vector<Edge> edges;
    std::vector<double> weights;
    for (const auto& [e, c] : coeff) {
        Edge ed = g.edge(e);
        ed.weight *= c;
        weights.push_back(ed.weight);
        edges.push_back(ed);
    }
    const ConnectionGraph sparse(g.node_count(), std::move(edges));
    {
        auto f = run.open("sparsifier.edges");
        write_edge_list(f, sparse,
                        "u v weight angle; sparsifier of " + src.description + ", t " + std::to_string(t) +
                            ", sampler " + cfg.sampler);
    }
    m["union_edges"] = sparse.edge_count();
    m["total_edges"] = total;
    m["weights"] = summary(weights);
    run.write_json("meta.json", m);
}

void run_precond(Run& run)
{
    const GraphSource src = load_graph(run);
    const ExperimentConfig& cfg = run.cfg;
    const ConnectionGraph g = laplacian_graph(run, src.graph);
    const ConnectionGraph unit = with_unit_weights(g);
    const std::vector<double> qs = cfg.q_values.empty() ? std::vector<double>{cfg.q} : cfg.q_values;
    for (double q : qs) {
        if (!g.nontrivial_connection() && !(q > 0.0)) {
            throw InvalidInput("Δ + qI is singular for a trivial connection at q = 0; use q > 0");
        }
    }
    const Vector b = unit_rhs(g.node_count(), cfg.seed);

    auto f = run.open("precond.csv");
    header(f, {"q: regularization; method: <sampler>-<ls>; t: batch size; replicate: stream index",
               "union_edges: distinct sparsifier edges; total_edges: edges counted with multiplicity",
               "cond: lambda_max/lambda_min of M^-1 (Delta + qI) by Lanczos",
               "cg_plain / cg_preconditioned: CG iterations to relative residual 1e-8",
               "iid arms draw as many edges as the preceding forest arm at the same (q, t, replicate), else t*n"});
    f << "q,method,t,replicate,union_edges,total_edges,cond,lambda_min,lambda_max,cg_plain,cg_preconditioned,"
         "preconditioner\n";
    json rows = json::array();
    for (std::size_t qi = 0; qi < qs.size(); ++qi) {
        const double q = qs[qi];
        const SparseMatrix a = assemble_magnetic_laplacian(g, q).regularized();
        std::map<std::tuple<int, int>, std::size_t> matched;
        std::map<LsMethod, LeverageScores> ls_cache;
        auto scores = [&](LsMethod method) -> const LeverageScores& {
            auto it = ls_cache.find(method);
            if (it == ls_cache.end()) {
                it = ls_cache.emplace(method, compute_ls(method, unit, q, cfg.seed)).first;
            }
            return it->second;
        };
        for (const std::string& method : cfg.methods) {
            const auto dash = method.find('-');
            const std::string kind = method.substr(0, dash);
            const LsMethod lsm = parse_ls_method(method.substr(dash + 1));
            if (kind == "st" && lsm != LsMethod::uniform) {
                throw InvalidInput("method " + method + ": spanning-tree batches use uniform scores (st-uniform)");
            }
            const LeverageScores& ls = scores(lsm);
            for (int t : cfg.batches) {
                for (int r = 0; r < cfg.replicates; ++r) {
                    const std::uint64_t stream = derive_key(derive_key(derive_key(cfg.seed, qi), t), r);
                    std::unique_ptr<Preconditioner> m;
                    std::size_t union_edges = 0;
                    std::size_t total = 0;
                    if (kind == "iid") {
                        const auto it = matched.find({t, r});
                        const std::size_t s =
                            it != matched.end() ? it->second : static_cast<std::size_t>(t) * g.node_count();
                        CounterRng rng(derive_key(stream, kIidStream));
                        const auto t0 = Clock::now();
                        const auto draws = iid_edges(ls.values, static_cast<int>(s), rng);
                        run.sampler_seconds += seconds_since(t0);
                        union_edges = std::set<int>(draws.begin(), draws.end()).size();
                        total = draws.size();
                        m = std::make_unique<SparsePreconditioner>(
                            build_iid_sparsifier(g, draws, ls.values, q).regularized());
                    } else {
                        const ModeSetup setup{kind == "st" ? without_connection(unit) : unit, q};
                        WalkStats stats;
                        auto forests = draw_forests(run, kind == "st" ? "st" : "mtsf", setup, t,
                                                    derive_key(stream, kSampleStream), &stats);
                        const SparsifierBatch batch = make_batch(std::move(forests), ls, q);
                        union_edges = batch.multiplicity.size();
                        total = batch.total_edges();
                        matched.try_emplace({t, r}, total);
                        m = make_sparsifier_preconditioner(g, batch);
                    }
                    const PrecondReport rep = precond_report(a, *m, b);
                    f << format_double(q) << ',' << method << ',' << t << ',' << r << ',' << union_edges << ','
                      << total << ',' << format_double(rep.cond.cond) << ',' << format_double(rep.cond.lambda_min)
                      << ',' << format_double(rep.cond.lambda_max) << ',' << rep.iterations_plain << ','
                      << rep.iterations_preconditioned << ',' << m->name() << '\n';
                    rows.push_back({{"q", q},
                                    {"method", method},
                                    {"t", t},
                                    {"replicate", r},
                                    {"union_edges", union_edges},
                                    {"total_edges", total},
                                    {"preconditioner", m->name()},
                                    {"cond", rep.cond.cond},
                                    {"lambda_min", rep.cond.lambda_min},
                                    {"lambda_max", rep.cond.lambda_max},
                                    {"lanczos_iterations", rep.cond.iterations},
                                    {"iterations_plain", rep.iterations_plain},
                                    {"iterations_preconditioned", rep.iterations_preconditioned},
                                    {"residuals_plain", rep.residuals_plain},
                                    {"residuals_preconditioned", rep.residuals_preconditioned}});
                }
            }
        }
    }
    json meta = run.meta();
    meta["graph"] = describe(src);
    meta["laplacian"] = cfg.laplacian;
    meta["reports"] = rows;
    run.write_json("precond.json", meta);
}

void run_ssl(Run& run)
{
    const GraphSource src = load_graph(run);
    const ConnectionGraph g = laplacian_graph(run, src.graph);
    if (run.cfg.input.empty()) {
        throw InvalidInput("ssl needs --input, a labels file of 'node value_re value_im' lines");
    }
    std::ifstream in(run.cfg.input);
    if (!in) {
        throw InvalidInput("cannot open labels file '" + run.cfg.input + "'");
    }
    Vector y = Vector::Zero(g.node_count());
    std::string line;
    int lineno = 0;
    int labelled = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos || line.front() == '#') {
            continue;
        }
        std::istringstream ls(line);
        int node = -1;
        double re = 0.0;
        double im = 0.0;
        if (!(ls >> node >> re >> im) || node < 0 || node >= g.node_count()) {
            throw InvalidInput("labels line " + std::to_string(lineno) + ": expected 'node value_re value_im' with "
                               "node in [0, " + std::to_string(g.node_count()) + ")");
        }
        y(node) = Complex(re, im);
        ++labelled;
    }
    SslOptions opt;
    opt.batch = run.cfg.batches.front();
    opt.seed = derive_key(run.cfg.seed, kSampleStream);
    const auto t0 = Clock::now();
    const SslResult res = ssl_solve(g, run.cfg.q, y, opt);
    run.sampler_seconds += seconds_since(t0);
    auto f = run.open("solution.csv");
    header(f, {"solution of (Delta + qI) f = q y; modulus and argument in [0, 2pi) of f(node)"});
    f << "node,re,im,modulus,argument\n";
    for (int u = 0; u < g.node_count(); ++u) {
        f << u << ',' << format_double(res.f(u).real()) << ',' << format_double(res.f(u).imag()) << ','
          << format_double(std::abs(res.f(u))) << ',' << format_double(wrap_angle(std::arg(res.f(u)))) << '\n';
    }
    json m = run.meta();
    m["graph"] = describe(src);
    m["q"] = run.cfg.q;
    m["labelled"] = labelled;
    m["batch"] = opt.batch;
    m["iterations"] = res.iterations;
    m["residual"] = res.residual;
    run.write_json("meta.json", m);
}

std::vector<Comparison> read_comparisons(const std::string& path, int& n)
{
    std::ifstream in(path);
    if (!in) {
        throw InvalidInput("cannot open comparisons file '" + path + "'");
    }
    std::vector<Comparison> out;
    std::string line;
    int lineno = 0;
    n = 0;
    std::optional<int> declared;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string first;
        if (!(ls >> first)) {
            continue;
        }
        if (first == "#") {
            std::string key;
            int value = 0;
            if (ls >> key >> value && key == "nodes") {
                declared = value;
            }
            continue;
        }
        if (first.front() == '#') {
            continue;
        }
        Comparison c;
        std::istringstream row(line);
        if (!(row >> c.u >> c.v >> c.kappa)) {
            throw InvalidInput("comparisons line " + std::to_string(lineno) + ": expected 'u v kappa'");
        }
        n = std::max({n, c.u + 1, c.v + 1});
        out.push_back(c);
    }
    if (declared) {
        n = *declared;
    }
    return out;
}

void run_syncrank(Run& run)
{
    const ExperimentConfig& cfg = run.cfg;
    ConnectionGraph g;
    std::vector<Comparison> cmp;
    std::vector<int> reference;
    json source;
    if (!cfg.input.empty()) {
        int n = 0;
        cmp = read_comparisons(cfg.input, n);
        g = embed_comparisons(n, cmp);
        source = {{"comparisons", cfg.input}, {"nodes", n}, {"edges", g.edge_count()}};
    } else {
        GraphSource src = load_graph(run);
        g = std::move(src.graph);
        cmp = comparisons_from_graph(g);
        if (!src.ranking.empty()) {
            reference = planted_ranks(src.ranking);
        }
        source = describe(src);
    }
    SpectralOptions opt;
    opt.mode = parse_eigen_mode(cfg.eigen_mode);
    opt.batches = cfg.batches.front();
    opt.ls = cfg.ls;
    opt.seed = derive_key(cfg.seed, kSampleStream);
    opt.threads = cfg.threads;
    const auto t0 = Clock::now();
    const SpectralScores scores = spectral_scores(g, opt);
    run.sampler_seconds += seconds_since(t0);
    RankingResult res = rank_from_scores(scores.angles, cmp, reference);
    res.degenerate = scores.degenerate;

    auto f = run.open("ranking.csv");
    header(f, {"angle: arg of the eigenvector entry in [0, 2pi); induced_rank: rank by decreasing angle, ties by "
               "node id",
               "rank: induced rank after the best circular shift (1 is best)" +
                   std::string(reference.empty() ? "" : "; planted_rank: reference ranking")});
    f << "node,angle,induced_rank,rank" << (reference.empty() ? "" : ",planted_rank") << '\n';
    for (int u = 0; u < g.node_count(); ++u) {
        const auto i = static_cast<std::size_t>(u);
        f << u << ',' << format_double(res.angles[i]) << ',' << res.induced[i] << ',' << res.ranks[i];
        if (!reference.empty()) {
            f << ',' << reference[i];
        }
        f << '\n';
    }
    json m = run.meta();
    m["graph"] = source;
    m["eigen_mode"] = to_string(opt.mode);
    m["batches"] = opt.batches;
    m["ls"] = to_string(opt.ls);
    m["lambda"] = scores.eigen.lambda;
    m["residual"] = scores.eigen.residual;
    m["gap"] = scores.eigen.gap;
    m["degenerate"] = res.degenerate;
    m["sparsifier_edges"] = scores.sparsifier_edges;
    m["shift"] = res.shift;
    m["upsets"] = res.upsets;
    m["tie_break"] = "node id";
    if (res.tau) {
        m["kendall_tau"] = *res.tau;
    }
    run.write_json("metrics.json", m);
}

void run_bench(Run& run)
{
    const GraphSource src = load_graph(run);
    const ExperimentConfig& cfg = run.cfg;
    if (cfg.q_values.empty()) {
        throw InvalidInput("bench needs --q-values, e.g. 0.1,1,10");
    }
    const ConnectionGraph unit = with_unit_weights(laplacian_graph(run, src.graph));
    const ConnectionGraph tree_graph = without_connection(unit);
    auto f = run.open("bench.csv");
    header(f, {"seconds: monotonic time of one sampler call (graph construction excluded), single thread",
               "sampler: forest = cycle popping at q, wilson = uniform spanning tree (q ignored)"});
    f << "q,sampler,replicate,seconds,steps,edges,trees,cycles\n";
    json summary_rows = json::array();
    std::vector<double> forest_means;
    double wilson_total = 0.0;
    long long wilson_runs = 0;
    for (std::size_t qi = 0; qi < cfg.q_values.size(); ++qi) {
        const double q = cfg.q_values[qi];
        CyclePopper popper(unit, q, {cfg.weights == "capped" ? WeightMode::capped : WeightMode::exact});
        const CounterRng base(derive_key(derive_key(cfg.seed, kSampleStream), qi));
        double forest_sum = 0.0;
        double wilson_sum = 0.0;
        for (int r = 0; r < cfg.replicates; ++r) {
            for (const bool forest : {true, false}) {
                CounterRng rng = base.split(2 * static_cast<std::uint64_t>(r) + (forest ? 0 : 1));
                WalkStats stats;
                const auto t0 = Clock::now();
                const Mtsf F = forest ? popper.sample(rng, &stats) : wilson_st(tree_graph, rng, &stats);
                const double sec = seconds_since(t0);
                run.sampler_seconds += sec;
                (forest ? forest_sum : wilson_sum) += sec;
                f << format_double(q) << ',' << (forest ? "forest" : "wilson") << ',' << r << ','
                  << format_double(sec) << ',' << stats.steps << ',' << F.size() << ',' << F.tree_count() << ','
                  << F.cycles.size() << '\n';
            }
        }
        const double mf = forest_sum / cfg.replicates;
        const double mw = wilson_sum / cfg.replicates;
        forest_means.push_back(mf);
        wilson_total += wilson_sum;
        wilson_runs += cfg.replicates;
        summary_rows.push_back({{"q", q}, {"forest_mean_seconds", mf}, {"wilson_mean_seconds", mw}});
    }
    json m = run.meta();
    m["graph"] = describe(src);
    m["replicates"] = cfg.replicates;
    m["summary"] = summary_rows;
    m["forest_time_nonincreasing_in_q"] = std::is_sorted(forest_means.rbegin(), forest_means.rend());
    m["wilson_mean_seconds"] = wilson_total / static_cast<double>(wilson_runs);
    // Timing values vary between runs; bench output is not part of the determinism contract.
    run.write_json("bench.json", m);
}

// ---------------------------------------------------------------- option plumbing

// CLI options write into `staged`; only the options actually given override the
// config file, which in turn overrides the defaults.
struct Binder {
    ExperimentConfig staged;
    std::string staged_ls;
    std::vector<std::pair<CLI::Option*, std::function<void(ExperimentConfig&)>>> fields;

    template <class T>
    void bind(CLI::App* app, const std::string& flag, T ExperimentConfig::*member, const std::string& help)
    {
        CLI::Option* opt = app->add_option(flag, staged.*member, help);
        if constexpr (std::is_same_v<T, std::vector<double>> || std::is_same_v<T, std::vector<int>> ||
                      std::is_same_v<T, std::vector<std::string>>) {
            opt->delimiter(',');
        }
        fields.emplace_back(opt, [this, member](ExperimentConfig& c) { c.*member = staged.*member; });
    }

    void bind_ls(CLI::App* app)
    {
        CLI::Option* opt = app->add_option("--ls", staged_ls, "leverage scores: exact | uniform | jl");
        fields.emplace_back(opt, [this](ExperimentConfig& c) { c.ls = parse_ls_method(staged_ls); });
    }

    void apply(ExperimentConfig& c) const
    {
        for (const auto& [opt, set] : fields) {
            if (opt->count() > 0) {
                set(c);
            }
        }
    }
};

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Magnetic Laplacian sparsification by random spanning forests"};
    app.require_subcommand(1);
    Binder b;
    std::string config_path;
    app.add_option("--config", config_path, "key = value file; command-line flags override it");
    b.bind(&app, "--seed", &ExperimentConfig::seed, "master seed");
    b.bind(&app, "--out", &ExperimentConfig::out, "output directory");
    b.bind(&app, "--threads", &ExperimentConfig::threads, "worker threads for batch sampling");

    const auto graph_opt = [&](CLI::App* s) {
        b.bind(s, "--graph", &ExperimentConfig::graph,
               "er:n=,p= | mun:n=,p=,eta= | ero:n=,p=,eta= | barbell:n=[,eta=] | file:<path>[,noise=mun|outliers,eta=]");
    };
    const auto laplacian_opt = [&](CLI::App* s) {
        b.bind(s, "--laplacian", &ExperimentConfig::laplacian, "magnetic | combinatorial (drop the connection)");
    };

    CLI::App* gen = app.add_subcommand("gen", "generate a graph: graph.edges and ranking.txt");
    graph_opt(gen);

    CLI::App* sample = app.add_subcommand("sample", "draw forests: forests.txt and stats.json");
    graph_opt(sample);
    b.bind(sample, "--q", &ExperimentConfig::q, "regularization");
    b.bind(sample, "--sampler,--mode", &ExperimentConfig::sampler, "st | sf | crsf | mtsf");
    b.bind(sample, "--weights", &ExperimentConfig::weights, "cycle acceptance: exact | capped");
    b.bind(sample, "--replicates", &ExperimentConfig::replicates, "number of samples");

    CLI::App* ls = app.add_subcommand("ls", "leverage scores: scores.txt");
    graph_opt(ls);
    laplacian_opt(ls);
    b.bind(ls, "--q", &ExperimentConfig::q, "regularization");
    b.bind_ls(ls);

    CLI::App* sparsify = app.add_subcommand("sparsify", "build a sparsifier: sparsifier.edges and meta.json");
    graph_opt(sparsify);
    laplacian_opt(sparsify);
    b.bind(sparsify, "--q", &ExperimentConfig::q, "regularization");
    b.bind(sparsify, "--sampler,--mode", &ExperimentConfig::sampler, "st | sf | crsf | mtsf | iid");
    b.bind(sparsify, "--weights", &ExperimentConfig::weights, "exact | capped");
    b.bind(sparsify, "--estimator", &ExperimentConfig::estimator, "plain | self-normalized");
    b.bind_ls(sparsify);
    b.bind(sparsify, "-t,--batches", &ExperimentConfig::batches, "batch size (first entry is used)");
    b.bind(sparsify, "--epsilon", &ExperimentConfig::epsilon, "when positive, t comes from the batch bound");
    b.bind(sparsify, "--delta", &ExperimentConfig::delta, "failure probability of the bound");

    CLI::App* precond = app.add_subcommand("precond", "condition numbers and CG counts: precond.csv and precond.json");
    graph_opt(precond);
    laplacian_opt(precond);
    b.bind(precond, "--q", &ExperimentConfig::q, "regularization");
    b.bind(precond, "--q-values", &ExperimentConfig::q_values, "sweep of q (overrides --q)");
    b.bind(precond, "--methods", &ExperimentConfig::methods, "arms <dpp|st|iid>-<exact|uniform|jl>");
    b.bind(precond, "-t,--batches", &ExperimentConfig::batches, "batch sizes");
    b.bind(precond, "--replicates", &ExperimentConfig::replicates, "replicates per cell");
    b.bind(precond, "--weights", &ExperimentConfig::weights, "exact | capped");

    CLI::App* ssl = app.add_subcommand("ssl", "semi-supervised solve: solution.csv");
    graph_opt(ssl);
    laplacian_opt(ssl);
    b.bind(ssl, "--q", &ExperimentConfig::q, "regularization (> 0)");
    b.bind(ssl, "--input,--labels", &ExperimentConfig::input, "labels file 'node value_re value_im'");
    b.bind(ssl, "-t,--batches", &ExperimentConfig::batches, "forests in the preconditioner");

    CLI::App* rank = app.add_subcommand("syncrank", "spectral ranking: ranking.csv and metrics.json");
    graph_opt(rank);
    b.bind(rank, "--input,--comparisons", &ExperimentConfig::input, "comparisons file 'u v kappa'");
    b.bind(rank, "--eigen-mode", &ExperimentConfig::eigen_mode,
           "exact | sparsify-and-eigensolve | sparsify-and-precondition");
    b.bind(rank, "-t,--batches", &ExperimentConfig::batches, "forests in the sparsifier");
    b.bind_ls(rank);

    CLI::App* bench = app.add_subcommand("bench", "forest vs spanning tree sampling time: bench.csv and bench.json");
    graph_opt(bench);
    laplacian_opt(bench);
    b.bind(bench, "--q-values", &ExperimentConfig::q_values, "q sweep");
    b.bind(bench, "--replicates", &ExperimentConfig::replicates, "runs per q");
    b.bind(bench, "--weights", &ExperimentConfig::weights, "exact | capped");

    CLI11_PARSE(app, argc, argv);

    try {
        Run run;
        if (!config_path.empty()) {
            run.cfg = load_config(config_path);
        }
        b.apply(run.cfg);
        run.cfg.command = app.get_subcommands().front()->get_name();
        validate_config(run.cfg);
        run.out = run.cfg.out;
        fs::create_directories(run.out);
        save_config(run.cfg, run.path("config.txt").string());

        const std::map<std::string, std::function<void(Run&)>> commands{
            {"gen", run_gen},   {"sample", run_sample}, {"ls", run_ls},           {"sparsify", run_sparsify},
            {"precond", run_precond}, {"ssl", run_ssl}, {"syncrank", run_syncrank}, {"bench", run_bench},
        };
        commands.at(run.cfg.command)(run);
        run.finish();
    } catch (const std::exception& e) {
        std::cerr << "maglap: error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
