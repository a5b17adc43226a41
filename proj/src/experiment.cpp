#include "maglap/experiment.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "maglap/errors.hpp"

namespace maglap {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    if (trim(s).empty()) {
        return out;
    }
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep)) {
        out.push_back(trim(item));
    }
    return out;
}

double parse_double(const std::string& s, const std::string& what)
{
    // strtod accepts the full %.17g output, including inf and nan.
    const std::string t = trim(s);
    char* end = nullptr;
    const double x = std::strtod(t.c_str(), &end);
    if (t.empty() || end != t.c_str() + t.size()) {
        throw InvalidInput(what + ": '" + s + "' is not a number");
    }
    return x;
}

template <class Int>
Int parse_int(const std::string& s, const std::string& what)
{
    const std::string t = trim(s);
    Int x{};
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
        throw InvalidInput(what + ": '" + s + "' is not an integer");
    }
    return x;
}

template <class T, class F>
std::string join(const std::vector<T>& xs, F&& fmt)
{
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        out += (i ? "," : "") + fmt(xs[i]);
    }
    return out;
}

void require_one_of(const std::string& key, const std::string& value, std::initializer_list<const char*> allowed)
{
    std::string list;
    for (const char* a : allowed) {
        if (value == a) {
            return;
        }
        list += (list.empty() ? "" : ", ") + std::string(a);
    }
    throw InvalidInput(key + " = '" + value + "' is not one of: " + list);
}

} // namespace

std::string format_double(double x)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string to_text(const ExperimentConfig& c)
{
    std::ostringstream out;
    out << "command = " << c.command << '\n'
        << "graph = " << c.graph << '\n'
        << "q = " << format_double(c.q) << '\n'
        << "q_values = " << join(c.q_values, format_double) << '\n'
        << "sampler = " << c.sampler << '\n'
        << "weights = " << c.weights << '\n'
        << "estimator = " << c.estimator << '\n'
        << "ls = " << to_string(c.ls) << '\n'
        << "batches = " << join(c.batches, [](int x) { return std::to_string(x); }) << '\n'
        << "replicates = " << c.replicates << '\n'
        << "seed = " << c.seed << '\n'
        << "out = " << c.out << '\n'
        << "threads = " << c.threads << '\n'
        << "epsilon = " << format_double(c.epsilon) << '\n'
        << "delta = " << format_double(c.delta) << '\n'
        << "eigen_mode = " << c.eigen_mode << '\n'
        << "input = " << c.input << '\n'
        << "methods = " << join(c.methods, [](const std::string& s) { return s; }) << '\n'
        << "laplacian = " << c.laplacian << '\n';
    return out.str();
}

ExperimentConfig parse_config(const std::string& text)
{
    ExperimentConfig c;
    using Setter = std::function<void(const std::string&, const std::string&)>;
    const std::map<std::string, Setter> setters{
        {"command", [&](const std::string& v, const std::string&) { c.command = v; }},
        {"graph", [&](const std::string& v, const std::string&) { c.graph = v; }},
        {"q", [&](const std::string& v, const std::string& w) { c.q = parse_double(v, w); }},
        {"q_values",
         [&](const std::string& v, const std::string& w) {
             c.q_values.clear();
             for (const auto& x : split(v, ',')) {
                 c.q_values.push_back(parse_double(x, w));
             }
         }},
        {"sampler", [&](const std::string& v, const std::string&) { c.sampler = v; }},
        {"weights", [&](const std::string& v, const std::string&) { c.weights = v; }},
        {"estimator", [&](const std::string& v, const std::string&) { c.estimator = v; }},
        {"ls", [&](const std::string& v, const std::string&) { c.ls = parse_ls_method(v); }},
        {"batches",
         [&](const std::string& v, const std::string& w) {
             c.batches.clear();
             for (const auto& x : split(v, ',')) {
                 c.batches.push_back(parse_int<int>(x, w));
             }
         }},
        {"replicates", [&](const std::string& v, const std::string& w) { c.replicates = parse_int<int>(v, w); }},
        {"seed", [&](const std::string& v, const std::string& w) { c.seed = parse_int<std::uint64_t>(v, w); }},
        {"out", [&](const std::string& v, const std::string&) { c.out = v; }},
        {"threads", [&](const std::string& v, const std::string& w) { c.threads = parse_int<int>(v, w); }},
        {"epsilon", [&](const std::string& v, const std::string& w) { c.epsilon = parse_double(v, w); }},
        {"delta", [&](const std::string& v, const std::string& w) { c.delta = parse_double(v, w); }},
        {"eigen_mode", [&](const std::string& v, const std::string&) { c.eigen_mode = v; }},
        {"input", [&](const std::string& v, const std::string&) { c.input = v; }},
        {"methods", [&](const std::string& v, const std::string&) { c.methods = split(v, ','); }},
        {"laplacian", [&](const std::string& v, const std::string&) { c.laplacian = v; }},
    };
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#') {
            continue;
        }
        const auto eq = t.find('=');
        const std::string where = "config line " + std::to_string(lineno);
        if (eq == std::string::npos) {
            throw InvalidInput(where + ": expected 'key = value'");
        }
        const std::string key = trim(t.substr(0, eq));
        const auto it = setters.find(key);
        if (it == setters.end()) {
            throw InvalidInput(where + ": unknown key '" + key + "'");
        }
        it->second(trim(t.substr(eq + 1)), where + " (" + key + ")");
    }
    return c;
}

ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw InvalidInput("cannot open config file '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

void save_config(const ExperimentConfig& config, const std::string& path)
{
    std::ofstream out(path);
    if (!out) {
        throw InvalidInput("cannot write config file '" + path + "'");
    }
    out << to_text(config);
}

void validate_config(const ExperimentConfig& c)
{
    require_one_of("sampler", c.sampler, {"st", "sf", "crsf", "mtsf", "iid"});
    require_one_of("weights", c.weights, {"exact", "capped"});
    require_one_of("estimator", c.estimator, {"plain", "self-normalized"});
    require_one_of("eigen_mode", c.eigen_mode, {"exact", "sparsify-and-eigensolve", "sparsify-and-precondition"});
    require_one_of("laplacian", c.laplacian, {"magnetic", "combinatorial"});
    if (!(c.q >= 0.0) || !std::isfinite(c.q)) {
        throw InvalidInput("q must be a finite nonnegative number");
    }
    for (double q : c.q_values) {
        if (!(q >= 0.0) || !std::isfinite(q)) {
            throw InvalidInput("q_values must be finite and nonnegative");
        }
    }
    if (c.batches.empty()) {
        throw InvalidInput("batches must list at least one batch size");
    }
    for (int t : c.batches) {
        if (t < 1) {
            throw InvalidInput("batch sizes must be at least 1");
        }
    }
    if (c.replicates < 1) {
        throw InvalidInput("replicates must be at least 1");
    }
    if (c.threads < 1) {
        throw InvalidInput("threads must be at least 1");
    }
    if (c.epsilon < 0.0 || c.epsilon >= 1.0) {
        throw InvalidInput("epsilon must lie in [0, 1) (0 disables the bound)");
    }
    if (!(c.delta > 0.0 && c.delta < 1.0)) {
        throw InvalidInput("delta must lie in (0, 1)");
    }
    for (const auto& m : c.methods) {
        const auto dash = m.find('-');
        if (dash == std::string::npos) {
            throw InvalidInput("method '" + m + "' must look like <dpp|st|iid>-<exact|uniform|jl>");
        }
        require_one_of("method sampler", m.substr(0, dash), {"dpp", "st", "iid"});
        parse_ls_method(m.substr(dash + 1));
    }
}

GraphSource make_graph(const std::string& spec, std::uint64_t seed)
{
    const auto colon = spec.find(':');
    if (colon == std::string::npos) {
        throw InvalidInput("graph spec '" + spec + "' must look like kind:key=value,... or file:<path>");
    }
    const std::string kind = spec.substr(0, colon);
    const std::vector<std::string> parts = split(spec.substr(colon + 1), ',');
    std::map<std::string, std::string> kv;
    std::string path;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        const auto eq = parts[i].find('=');
        if (kind == "file" && i == 0) {
            path = parts[i];
            continue;
        }
        if (eq == std::string::npos) {
            throw InvalidInput("graph spec '" + spec + "': expected key=value, got '" + parts[i] + "'");
        }
        kv[parts[i].substr(0, eq)] = parts[i].substr(eq + 1);
    }
    auto take = [&](const std::string& key, std::optional<double> fallback = std::nullopt) {
        const auto it = kv.find(key);
        if (it == kv.end()) {
            if (fallback) {
                return *fallback;
            }
            throw InvalidInput("graph spec '" + spec + "' needs " + key + "=");
        }
        const double x = parse_double(it->second, "graph spec " + key);
        kv.erase(it);
        return x;
    };
    auto finish = [&](GraphSource g) {
        if (!kv.empty()) {
            throw InvalidInput("graph spec '" + spec + "' has unknown key '" + kv.begin()->first + "'");
        }
        return g;
    };
    auto from_planted = [&](PlantedInstance inst) {
        return finish({std::move(inst.graph), std::move(inst.ranking), inst.model});
    };

    if (kind == "er") {
        const int n = static_cast<int>(take("n"));
        const double p = take("p");
        return finish({gen_er(n, p, seed), {}, "ER(" + std::to_string(n) + ", " + format_double(p) + ")"});
    }
    if (kind == "mun") {
        const int n = static_cast<int>(take("n"));
        const double p = take("p");
        return from_planted(gen_mun(n, p, take("eta"), seed));
    }
    if (kind == "ero") {
        const int n = static_cast<int>(take("n"));
        const double p = take("p");
        return from_planted(gen_ero(n, p, take("eta"), seed));
    }
    if (kind == "barbell") {
        const int n = static_cast<int>(take("n"));
        return from_planted(gen_barbell(n, take("eta", 0.0), seed));
    }
    if (kind == "file") {
        ConnectionGraph g = read_edge_list_file(path);
        const auto noise = kv.find("noise");
        if (noise == kv.end()) {
            return finish({std::move(g), {}, "file " + path});
        }
        const std::string model = noise->second;
        kv.erase(noise);
        require_one_of("noise", model, {"mun", "outliers"});
        const double eta = take("eta", 0.0);
        return from_planted(
            attach_connection(g, model == "mun" ? NoiseModel::mun : NoiseModel::outliers, eta, seed));
    }
    throw InvalidInput("unknown graph kind '" + kind + "' (expected er, mun, ero, barbell or file)");
}

} // namespace maglap
