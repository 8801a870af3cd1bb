#include "spinhjb/scenarios.hpp"

#include "json.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

namespace spinhjb {

namespace {

constexpr Vec3 e1{1.0, 0.0, 0.0};
constexpr Vec3 e2{0.0, 1.0, 0.0};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string vec_list(std::span<const double> flat) {
    std::string out;
    for (std::size_t k = 0; k < flat.size(); ++k) {
        if (k > 0) out += (k % 3 == 0) ? "; " : " ";
        out += num(flat[k]);
    }
    return out;
}

std::string vec_list(const std::vector<Vec3>& v) {
    Field flat;
    for (const Vec3& x : v) flat.insert(flat.end(), {x.x, x.y, x.z});
    return vec_list(flat);
}

std::vector<double> parse_numbers(const std::string& text, const std::string& key) {
    std::string clean = text;
    std::replace(clean.begin(), clean.end(), ';', ' ');
    std::replace(clean.begin(), clean.end(), ',', ' ');
    std::istringstream in(clean);
    std::vector<double> out;
    std::string tok;
    while (in >> tok) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(tok, &used));
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw std::invalid_argument("config key '" + key + "': '" + tok + "' is not a number");
        }
    }
    return out;
}

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, sep)) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        out.push_back(b == std::string::npos ? "" : item.substr(b, e - b + 1));
    }
    return out;
}

std::vector<Vec3> parse_vectors(const std::string& text, const std::string& key) {
    const auto v = parse_numbers(text, key);
    if (v.empty() || v.size() % 3 != 0)
        throw std::invalid_argument("config key '" + key + "' needs groups of 3 numbers, got " +
                                    std::to_string(v.size()));
    std::vector<Vec3> out;
    for (std::size_t k = 0; k < v.size(); k += 3) out.push_back({v[k], v[k + 1], v[k + 2]});
    return out;
}

SpinConfiguration parse_state(const std::string& text, const std::string& key) {
    try {
        return SpinConfiguration(parse_vectors(text, key));
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument("config key '" + key + "': " + e.what() +
                                    " (each spin must be a unit vector)");
    }
}

using boost::property_tree::ptree;

class Reader {
public:
    explicit Reader(const ptree& tree) : tree_(tree) {}

    std::string str(const std::string& key) const {
        auto v = tree_.get_optional<std::string>(key);
        if (!v) throw std::invalid_argument("config is missing required key '" + key + "'");
        return *v;
    }
    std::string str(const std::string& key, const std::string& fallback) const {
        return tree_.get<std::string>(key, fallback);
    }
    double real(const std::string& key) const {
        const auto v = parse_numbers(str(key), key);
        if (v.size() != 1) throw std::invalid_argument("config key '" + key + "' needs one number");
        return v[0];
    }
    std::uint64_t count(const std::string& key) const {
        const std::string s = str(key);
        try {
            std::size_t used = 0;
            if (!s.empty() && s[0] == '-') throw std::invalid_argument(s);
            const auto v = std::stoull(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw std::invalid_argument("config key '" + key + "' needs a non-negative integer, got '" + s + "'");
        }
    }

private:
    const ptree& tree_;
};

std::string exchange_name(ExchangeMatrix::Builder b) {
    switch (b) {
        case ExchangeMatrix::Builder::zero: return "zero";
        case ExchangeMatrix::Builder::two_spin_mu: return "two-spin-mu";
        case ExchangeMatrix::Builder::ring: return "ring";
        case ExchangeMatrix::Builder::dense: return "dense";
    }
    return "zero";
}

std::string payoff_name(TerminalPayoff::Kind k) {
    switch (k) {
        case TerminalPayoff::Kind::quadratic_tracking: return "quadratic-tracking";
        case TerminalPayoff::Kind::log_harmonic_1spin: return "log-harmonic-1spin";
        case TerminalPayoff::Kind::log_harmonic_2spin: return "log-harmonic-2spin";
        case TerminalPayoff::Kind::custom: break;
    }
    throw std::invalid_argument("custom terminal payoffs cannot be written to a config file");
}

ScenarioSpec base_spec(std::string name, std::size_t n) {
    ScenarioSpec s;
    s.name = std::move(name);
    s.params.horizon = 0.5;
    s.params.d_diag.assign(n, Vec3{0.0, 0.0, 0.0});
    s.params.exchange = ExchangeMatrix::zero(n);
    s.partition = Partition(0.5, 50);
    s.output_dir = "out/" + s.name;
    return s;
}

ScenarioSpec switching_preset(std::string name, std::vector<Vec3> initial,
                              std::vector<TargetProfile::Track> tracks) {
    const std::size_t n = initial.size();
    ScenarioSpec s = base_spec(std::move(name), n);
    s.params.alpha = 0.1;
    s.params.delta = 0.0;
    s.params.lambda = 1e-3;
    s.params.nu = 0.3;
    s.params.c_ext = 0.1;
    s.params.d_diag.assign(n, Vec3{-5.0, 1.0, 3.5});
    s.params.exchange = ExchangeMatrix::ring(n);
    s.initial = SpinConfiguration(initial);
    s.target = TargetProfile::per_spin(std::move(tracks), s.params.horizon);
    s.payoff = TerminalPayoff::quadratic_tracking(s.target.at(s.params.horizon));
    s.estimator.samples = 1000000;
    s.estimator.hbar = 1e-3;
    return s;
}

}  // namespace

void ScenarioSpec::validate() const {
    params.validate();
    const std::size_t n = params.n_spins();
    if (initial.n_spins() != n)
        throw std::invalid_argument("initial configuration has " + std::to_string(initial.n_spins()) +
                                    " spins but the model has " + std::to_string(n));
    if (target.n_spins() != n)
        throw std::invalid_argument("target profile has " + std::to_string(target.n_spins()) +
                                    " spins but the model has " + std::to_string(n));
    if (payoff.kind() == TerminalPayoff::Kind::quadratic_tracking && payoff.target().size() != 3 * n)
        throw std::invalid_argument("payoff target has the wrong number of spins");
    if (payoff.kind() == TerminalPayoff::Kind::log_harmonic_1spin && n != 1)
        throw std::invalid_argument("payoff log-harmonic-1spin needs exactly 1 spin");
    if (payoff.kind() == TerminalPayoff::Kind::log_harmonic_2spin && n != 2)
        throw std::invalid_argument("payoff log-harmonic-2spin needs exactly 2 spins");
    if (partition.horizon != params.horizon)
        throw std::invalid_argument("grid horizon differs from the model horizon T");
    if (partition.start != 0) throw std::invalid_argument("scenario grid must start at t = 0");
    if (!(params.nu > 0.0)) throw std::invalid_argument("noise intensity nu must be > 0");
    estimator.validate();
}

std::vector<std::string> regime_warnings(const ScenarioSpec& spec) {
    const ModelParams& p = spec.params;
    std::vector<std::string> out;
    const double lhs = p.lambda * p.nu * p.nu;
    const double rhs = std::min(p.delta, 1.0) * p.c_ext * p.c_ext * (1.0 + p.alpha * p.alpha);
    if (rhs > 0.0 && lhs < 1e-2 * rhs) {
        std::ostringstream msg;
        msg << "lambda*nu^2 = " << lhs << " is far below min(delta,1)*C_ext^2*(1+alpha^2) = " << rhs
            << "; Monte-Carlo weights are likely to underflow";
        out.push_back(msg.str());
    }
    return out;
}

const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names{"test1",         "test2",         "spin3",
                                                "spin4-setup1", "spin4-setup2", "spin10"};
    return names;
}

ScenarioSpec preset(const std::string& name) {
    using C = TargetProfile::Constant;
    const TargetProfile::Track sw = TargetProfile::RotatingSwitch{};
    const Vec3 me1{-1.0, 0.0, 0.0};

    if (name == "test1") {
        ScenarioSpec s = base_spec(name, 1);
        s.params.alpha = s.params.nu = s.params.lambda = s.params.c_ext = 1.0;
        s.initial = SpinConfiguration(std::vector<Vec3>{e1});
        s.target = TargetProfile::per_spin({C{e1}}, s.params.horizon);
        s.payoff = TerminalPayoff::log_harmonic_1spin();
        s.estimator.samples = 10000;
        return s;
    }
    if (name == "test2") {
        ScenarioSpec s = base_spec(name, 2);
        s.params.alpha = 0.0;
        s.params.nu = s.params.lambda = s.params.c_ext = 1.0;
        s.params.exchange = ExchangeMatrix::two_spin(1.0);
        s.initial = SpinConfiguration(std::vector<Vec3>{e1, e2});
        s.target = TargetProfile::per_spin({C{e1}, C{e2}}, s.params.horizon);
        s.payoff = TerminalPayoff::log_harmonic_2spin();
        s.estimator.samples = 10000;
        return s;
    }
    if (name == "spin3") return switching_preset(name, {e1, me1, e1}, {C{e1}, sw, C{e1}});
    if (name == "spin4-setup1")
        return switching_preset(name, {e1, me1, e1, me1}, {C{e1}, sw, C{e1}, sw});
    if (name == "spin4-setup2")
        return switching_preset(name, {e1, me1, me1, e1}, {C{e1}, sw, sw, C{e1}});
    if (name == "spin10") {
        ScenarioSpec s = base_spec(name, 10);
        s.params.alpha = 1.0;
        s.params.lambda = 1.0;
        s.params.nu = 0.5;
        s.params.c_ext = 1.0;
        s.params.exchange = ExchangeMatrix::ring(10);
        std::vector<Vec3> m;
        for (int i = 1; i <= 10; ++i) {
            const double a = 2.0 * std::numbers::pi * i / 10.0;
            m.push_back(Vec3{0.0, std::sin(a), std::cos(a)});
        }
        s.initial = SpinConfiguration(m);
        s.target = TargetProfile::per_spin(std::vector<TargetProfile::Track>(10, C{e1}), s.params.horizon);
        s.payoff = TerminalPayoff::quadratic_tracking(s.target.at(s.params.horizon));
        s.estimator.samples = 10000;
        s.estimator.hbar = 1e-2;
        return s;
    }
    std::string known;
    for (const auto& n : preset_names()) known += " " + n;
    throw std::invalid_argument("unknown preset '" + name + "'; known presets:" + known);
}

ExactValue exact_solution_test1(double t, const SpinConfiguration& m, double horizon) {
    if (m.n_spins() != 1) throw std::invalid_argument("test problem 1 has one spin");
    const double beta = 2.0;
    const double e = std::exp(t - horizon);
    const Vec3 s = m.spin(0);
    ExactValue out;
    out.w = e * s.z + 2.0;
    out.grad_w = {-e * s.x * s.z, -e * s.y * s.z, e * (1.0 - s.z * s.z)};
    for (double g : out.grad_w) out.grad_W.push_back(-g / (beta * out.w));
    return out;
}

ExactValue exact_solution_test2(double t, const SpinConfiguration& m, double horizon) {
    if (m.n_spins() != 2) throw std::invalid_argument("test problem 2 has two spins");
    const double beta = 1.0;
    const double e = std::exp(t - horizon);
    const Vec3 a = m.spin(0);
    const Vec3 b = m.spin(1);
    ExactValue out;
    out.w = e * (a.z + b.z) + 2.0;
    out.grad_w = {-e * a.x * a.z, -e * a.y * a.z, e * (1.0 - a.z * a.z),
                  -e * b.x * b.z, -e * b.y * b.z, e * (1.0 - b.z * b.z)};
    for (double g : out.grad_w) out.grad_W.push_back(-g / (beta * out.w));
    return out;
}

ExactSolution exact_solution_for(const ScenarioSpec& spec) {
    const double T = spec.params.horizon;
    if (spec.payoff.kind() == TerminalPayoff::Kind::log_harmonic_1spin)
        return [T](double t, const SpinConfiguration& m) {
            auto v = exact_solution_test1(t, m, T);
            return std::pair{v.w, v.grad_W};
        };
    if (spec.payoff.kind() == TerminalPayoff::Kind::log_harmonic_2spin)
        return [T](double t, const SpinConfiguration& m) {
            auto v = exact_solution_test2(t, m, T);
            return std::pair{v.w, v.grad_W};
        };
    throw std::invalid_argument("scenario '" + spec.name + "' has no closed-form solution");
}

std::string emit_config(const ScenarioSpec& spec) {
    const ModelParams& p = spec.params;
    std::ostringstream o;
    o << "[scenario]\nname = " << spec.name << "\n\n";
    o << "[model]\n"
      << "alpha = " << num(p.alpha) << "\n"
      << "nu = " << num(p.nu) << "\n"
      << "lambda = " << num(p.lambda) << "\n"
      << "delta = " << num(p.delta) << "\n"
      << "c_ext = " << num(p.c_ext) << "\n"
      << "horizon = " << num(p.horizon) << "\n"
      << "d_diag = " << vec_list(p.d_diag) << "\n"
      << "exchange = " << exchange_name(p.exchange.builder()) << "\n";
    if (p.exchange.builder() == ExchangeMatrix::Builder::two_spin_mu)
        o << "exchange_mu = " << num(p.exchange.mu()) << "\n";
    if (p.exchange.builder() == ExchangeMatrix::Builder::dense) {
        o << "exchange_values =";
        for (double v : p.exchange.dense_values()) o << " " << num(v);
        o << "\n";
    }
    o << "\n[initial]\nspins = " << vec_list(spec.initial.flat()) << "\n\n";

    o << "[target]\n";
    if (spec.target.is_tabulated()) {
        const auto& tab = spec.target.table();
        o << "kind = tabulated\ntimes =";
        for (double t : tab.times) o << " " << num(t);
        o << "\nstates = ";
        for (std::size_t k = 0; k < tab.states.size(); ++k)
            o << (k ? " | " : "") << vec_list(tab.states[k]);
        o << "\n";
    } else {
        o << "kind = per-spin\nhorizon = " << num(spec.target.horizon()) << "\ntracks = ";
        const auto& tracks = spec.target.tracks();
        for (std::size_t i = 0; i < tracks.size(); ++i) {
            if (i) o << "; ";
            if (const auto* c = std::get_if<TargetProfile::Constant>(&tracks[i]))
                o << num(c->direction.x) << " " << num(c->direction.y) << " " << num(c->direction.z);
            else
                o << "switch";
        }
        o << "\n";
    }

    o << "\n[payoff]\nkind = " << payoff_name(spec.payoff.kind()) << "\n";
    if (spec.payoff.kind() == TerminalPayoff::Kind::quadratic_tracking)
        o << "target = " << vec_list(spec.payoff.target()) << "\n";

    o << "\n[grid]\nsteps = " << spec.partition.steps << "\n";
    const EstimatorConfig& e = spec.estimator;
    o << "\n[estimator]\n"
      << "samples = " << e.samples << "\n"
      << "hbar = " << num(e.hbar) << "\n"
      << "quad_points = " << e.quad_points << "\n"
      << "method = " << (e.method == GradientMethod::A ? "A" : "B") << "\n"
      << "threads = " << e.threads << "\n";
    o << "\n[seeds]\nouter = " << spec.seeds.outer << "\nestimator = " << spec.seeds.estimator << "\n";
    o << "\n[output]\ndir = " << spec.output_dir << "\n";
    return o.str();
}

ScenarioSpec parse_config(const std::string& text) {
    ptree tree;
    try {
        std::istringstream in(text);
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw std::invalid_argument(std::string("config is not valid INI: ") + e.what());
    }
    const Reader r(tree);
    ScenarioSpec s;
    s.name = r.str("scenario.name", "custom");

    ModelParams& p = s.params;
    p.alpha = r.real("model.alpha");
    p.nu = r.real("model.nu");
    p.lambda = r.real("model.lambda");
    p.delta = r.real("model.delta");
    p.c_ext = r.real("model.c_ext");
    p.horizon = r.real("model.horizon");
    p.d_diag = parse_vectors(r.str("model.d_diag"), "model.d_diag");
    const std::size_t n = p.d_diag.size();
    const std::string ex = r.str("model.exchange");
    if (ex == "zero")
        p.exchange = ExchangeMatrix::zero(n);
    else if (ex == "ring")
        p.exchange = ExchangeMatrix::ring(n);
    else if (ex == "two-spin-mu")
        p.exchange = ExchangeMatrix::two_spin(r.real("model.exchange_mu"));
    else if (ex == "dense")
        p.exchange = ExchangeMatrix::dense(n, parse_numbers(r.str("model.exchange_values"), "model.exchange_values"));
    else
        throw std::invalid_argument("config key 'model.exchange' must be zero, ring, two-spin-mu or dense, got '" +
                                    ex + "'");

    s.initial = parse_state(r.str("initial.spins"), "initial.spins");

    const std::string tk = r.str("target.kind");
    if (tk == "per-spin") {
        std::vector<TargetProfile::Track> tracks;
        for (const std::string& item : split(r.str("target.tracks"), ';')) {
            if (item == "switch") {
                tracks.emplace_back(TargetProfile::RotatingSwitch{});
            } else {
                const auto v = parse_numbers(item, "target.tracks");
                if (v.size() != 3)
                    throw std::invalid_argument("config key 'target.tracks': each entry is 'switch' or 3 numbers");
                tracks.emplace_back(TargetProfile::Constant{Vec3{v[0], v[1], v[2]}});
            }
        }
        s.target = TargetProfile::per_spin(std::move(tracks), r.real("target.horizon"));
    } else if (tk == "tabulated") {
        std::vector<SpinConfiguration> states;
        for (const std::string& item : split(r.str("target.states"), '|'))
            states.push_back(parse_state(item, "target.states"));
        s.target = TargetProfile::tabulated(parse_numbers(r.str("target.times"), "target.times"),
                                            std::move(states));
    } else {
        throw std::invalid_argument("config key 'target.kind' must be per-spin or tabulated, got '" + tk + "'");
    }

    const std::string pk = r.str("payoff.kind");
    if (pk == "quadratic-tracking")
        s.payoff = TerminalPayoff::quadratic_tracking(parse_state(r.str("payoff.target"), "payoff.target"));
    else if (pk == "log-harmonic-1spin")
        s.payoff = TerminalPayoff::log_harmonic_1spin();
    else if (pk == "log-harmonic-2spin")
        s.payoff = TerminalPayoff::log_harmonic_2spin();
    else
        throw std::invalid_argument(
            "config key 'payoff.kind' must be quadratic-tracking, log-harmonic-1spin or log-harmonic-2spin");

    const std::uint64_t steps = r.count("grid.steps");
    if (steps == 0) throw std::invalid_argument("config key 'grid.steps' must be >= 1");
    s.partition = Partition(p.horizon, steps);

    EstimatorConfig& e = s.estimator;
    e.samples = r.count("estimator.samples");
    e.hbar = r.real("estimator.hbar");
    e.quad_points = static_cast<int>(r.count("estimator.quad_points"));
    const std::string method = r.str("estimator.method");
    if (method != "A" && method != "B")
        throw std::invalid_argument("config key 'estimator.method' must be A or B");
    e.method = method == "A" ? GradientMethod::A : GradientMethod::B;
    e.threads = static_cast<unsigned>(r.count("estimator.threads"));

    s.seeds.outer = r.count("seeds.outer");
    s.seeds.estimator = r.count("seeds.estimator");
    s.output_dir = r.str("output.dir", "out/" + s.name);

    s.validate();
    return s;
}

ScenarioSpec load_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file '" + path.string() + "'");
    std::ostringstream text;
    text << in.rdbuf();
    if (path.extension() == ".json") {
        nlohmann::json manifest;
        try {
            manifest = nlohmann::json::parse(text.str());
        } catch (const nlohmann::json::exception& e) {
            throw std::invalid_argument("manifest '" + path.string() + "' is not valid JSON: " + e.what());
        }
        if (!manifest.contains("config") || !manifest["config"].is_string())
            throw std::invalid_argument("manifest '" + path.string() + "' has no 'config' entry");
        return parse_config(manifest["config"].get<std::string>());
    }
    return parse_config(text.str());
}

ScenarioResult run_scenario(const ScenarioSpec& spec, const GradientOracle& oracle) {
    spec.validate();
    ScenarioResult out;
    out.target = tabulate_target(spec.target, spec.partition);
    const WalkIncrements walk = sample_walk(spec.seeds.outer_policy(), 0, spec.partition.steps,
                                            spec.params.dims(), spec.partition.tau());
    out.run = run_algorithm(spec.params, spec.partition, spec.initial, oracle, walk);
    out.cost = realized_cost(spec.params, out.run, out.target, spec.payoff, spec.estimator.quad_points);
    return out;
}

ScenarioResult run_scenario(const ScenarioSpec& spec) {
    spec.validate();
    const TargetGrid target = tabulate_target(spec.target, spec.partition);
    const GradientOracle oracle = monte_carlo_oracle(spec.params, spec.partition, spec.estimator,
                                                     spec.payoff, target, spec.seeds.estimator_policy());
    return run_scenario(spec, oracle);
}

std::string trajectory_csv(const ScenarioResult& result) {
    const ControlledRun& run = result.run;
    const auto& states = run.trajectory.states;
    const std::size_t n = states.front().n_spins();
    std::ostringstream o;
    o << "t";
    for (std::size_t i = 1; i <= n; ++i)
        for (int l = 1; l <= 3; ++l) o << ",m" << i << "_" << l;
    for (std::size_t i = 1; i <= n; ++i)
        for (int l = 1; l <= 3; ++l) o << ",u" << i << "_" << l;
    for (std::size_t i = 1; i <= n; ++i) o << ",unorm2_" << i;
    for (std::size_t i = 1; i <= n; ++i) o << ",angle_" << i;
    o << ",w,w_stderr,flagged_fraction\n";

    for (std::size_t j = 0; j < states.size(); ++j) {
        o << num(run.trajectory.partition.time(j));
        for (double v : states[j].flat()) o << "," << num(v);
        const bool has_control = j < run.steps();
        if (!has_control) {
            o << std::string(3 * n + 2 * n + 3, ',') << "\n";
            continue;
        }
        const Field& u = run.u_state[j];
        for (double v : u) o << "," << num(v);
        for (std::size_t i = 0; i < n; ++i) o << "," << num(dot(block(u, i), block(u, i)));
        for (std::size_t i = 0; i < n; ++i) {
            o << ",";
            if (auto a = normalized_inner(states[j].spin(i), block(u, i))) o << num(*a);
        }
        const OracleValue& w = run.at_state[j];
        o << "," << num(w.w) << "," << num(w.w_stderr) << "," << num(w.flagged_fraction) << "\n";
    }
    return o.str();
}

std::string err_csv(const PathSample& trajectory, const std::vector<double>& err) {
    std::ostringstream o;
    o << "t,err\n";
    for (std::size_t j = 0; j < err.size(); ++j)
        o << num(trajectory.partition.time(trajectory.partition.start + j)) << "," << num(err[j]) << "\n";
    return o.str();
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << text;
}

}  // namespace

void write_run_artifact(const ScenarioSpec& spec, const ScenarioResult& result,
                        const std::filesystem::path& dir,
                        const std::vector<std::pair<std::string, std::string>>& extra_tables) {
    std::filesystem::create_directories(dir);
    const std::string config = emit_config(spec);
    write_text(dir / "config.ini", config);
    write_text(dir / "trajectory.csv", trajectory_csv(result));
    nlohmann::json files = nlohmann::json::array({"config.ini", "trajectory.csv"});
    for (const auto& [name, text] : extra_tables) {
        write_text(dir / name, text);
        files.push_back(name);
    }

    nlohmann::json manifest;
    manifest["library"] = "spinhjb";
    manifest["version"] = kLibraryVersion;
    manifest["scenario"] = spec.name;
    manifest["config"] = config;
    manifest["beta"] = beta(spec.params);
    manifest["cost"] = {{"running", result.cost.running},
                        {"control", result.cost.control},
                        {"terminal", result.cost.terminal},
                        {"total", result.cost.total()}};
    manifest["max_orthogonality"] = max_orthogonality_angle(result.run);
    manifest["max_norm_defect"] = [&] {
        double d = 0.0;
        for (const auto& s : result.run.trajectory.states) d = std::max(d, s.max_norm_defect());
        return d;
    }();
    manifest["warnings"] = regime_warnings(spec);
    manifest["files"] = files;
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

double time_average(const std::vector<double>& series, const Partition& partition) {
    if (series.size() < 2) return series.empty() ? 0.0 : series.front();
    const double tau = partition.tau();
    double acc = 0.0;
    for (std::size_t j = 0; j + 1 < series.size(); ++j) acc += 0.5 * tau * (series[j] + series[j + 1]);
    return acc / (tau * static_cast<double>(series.size() - 1));
}

}  // namespace spinhjb
