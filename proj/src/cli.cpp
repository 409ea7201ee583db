#include "semicl/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "semicl/errors.hpp"

namespace semicl::cli {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class ExprParser {
public:
    explicit ExprParser(const std::string& s) : s_(s) {}

    double parse() {
        const double v = sum();
        skip();
        if (i_ != s_.size()) fail();
        return v;
    }

private:
    [[noreturn]] void fail() const { fail_parse("bad_number", "cannot parse value '" + s_ + "'"); }
    void skip() {
        while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
    }
    double sum() {
        double v = product();
        for (;;) {
            skip();
            if (i_ < s_.size() && (s_[i_] == '+' || s_[i_] == '-')) {
                const char op = s_[i_++];
                const double r = product();
                v = op == '+' ? v + r : v - r;
            } else {
                return v;
            }
        }
    }
    double product() {
        double v = unary();
        for (;;) {
            skip();
            if (i_ < s_.size() && (s_[i_] == '*' || s_[i_] == '/')) {
                const char op = s_[i_++];
                const double r = unary();
                v = op == '*' ? v * r : v / r;
            } else {
                return v;
            }
        }
    }
    double unary() {
        skip();
        if (i_ < s_.size() && s_[i_] == '-') {
            ++i_;
            return -unary();
        }
        if (i_ < s_.size() && s_[i_] == '+') {
            ++i_;
            return unary();
        }
        return atom();
    }
    double atom() {
        skip();
        if (i_ >= s_.size()) fail();
        if (s_[i_] == '(') {
            ++i_;
            const double v = sum();
            skip();
            if (i_ >= s_.size() || s_[i_] != ')') fail();
            ++i_;
            return v;
        }
        if (s_.compare(i_, 2, "pi") == 0) {
            i_ += 2;
            return std::numbers::pi;
        }
        const char* begin = s_.c_str() + i_;
        char* end = nullptr;
        const double v = std::strtod(begin, &end);
        if (end == begin) fail();
        i_ += static_cast<std::size_t>(end - begin);
        return v;
    }

    std::string s_;
    std::size_t i_ = 0;
};

int parse_int(const std::string& v) {
    const double d = eval_expression(v);
    if (d != std::floor(d) || std::abs(d) > 1e9) fail_parse("bad_integer", "expected an integer, got '" + v + "'");
    return static_cast<int>(d);
}

bool parse_bool(const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    fail_parse("bad_bool", "expected true or false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double periodic_distance(double a, double b, double L) {
    double d = std::fmod(std::abs(a - b), L);
    return std::min(d, L - d);
}

}  // namespace

double eval_expression(const std::string& text) { return ExprParser(trim(text)).parse(); }

Profile parse_profile(const std::string& text) {
    const std::string t = trim(text);
    Profile p;
    const auto open = t.find('(');
    if (open == std::string::npos) {
        p.kind = t;
    } else {
        if (t.back() != ')') fail_parse("bad_profile", "unterminated profile '" + t + "'");
        p.kind = trim(t.substr(0, open));
        for (const auto& a : split_list(t.substr(open + 1, t.size() - open - 2))) p.args.push_back(eval_expression(a));
    }
    const std::map<std::string, std::size_t> arity{{"zero", 0}, {"gaussian", 3}, {"cosine", 2}};
    const auto it = arity.find(p.kind);
    if (it == arity.end()) fail_validation("unknown_profile", "unknown profile '" + p.kind + "'");
    if (p.args.size() != it->second) fail_validation("profile_arity", "wrong argument count for '" + p.kind + "'");
    if (p.kind == "gaussian" && !(p.args[1] > 0.0)) fail_validation("bad_profile", "gaussian width must be positive");
    return p;
}

Vec Profile::sample(const LatticeSpec& spec) const {
    Vec v = Vec::Zero(spec.n_x);
    for (int j = 0; j < spec.n_x; ++j) {
        const double x = j * spec.dx();
        if (kind == "gaussian") {
            const double d = periodic_distance(x, args[0], spec.L);
            v[j] = args[2] * std::exp(-0.5 * d * d / (args[1] * args[1]));
        } else if (kind == "cosine") {
            v[j] = args[1] * std::cos(2.0 * std::numbers::pi * args[0] * x / spec.L);
        }
    }
    return v;
}

std::string Profile::str() const {
    if (args.empty()) return kind;
    std::string s = kind + "(";
    for (std::size_t i = 0; i < args.size(); ++i) s += (i ? ", " : "") + fmt(args[i]);
    return s + ")";
}

Scenario parse_scenario(const std::string& text) {
    Scenario sc;
    std::optional<std::string> dt_text;
    using Setter = std::function<void(const std::string&)>;
    std::map<std::string, std::map<std::string, Setter>> keys;
    auto num = [](double& d) { return [&d](const std::string& v) { d = eval_expression(v); }; };
    auto integer = [](int& d) { return [&d](const std::string& v) { d = parse_int(v); }; };
    auto text_ = [](std::string& d) { return [&d](const std::string& v) { d = v; }; };
    double L = 2.0 * std::numbers::pi;
    bool have_t_on = false, have_t_f = false;
    keys["lattice"] = {{"n_x", integer(sc.n_x)},
                       {"L", num(L)},
                       {"dt", [&](const std::string& v) { dt_text = v; }},
                       {"n_t", integer(sc.n_t)},
                       {"t_i", num(sc.t_i)},
                       {"t_on", [&](const std::string& v) { sc.t_on = eval_expression(v); have_t_on = true; }},
                       {"t_f", [&](const std::string& v) { sc.t_f = eval_expression(v); have_t_f = true; }}};
    CouplingConfig& c = sc.coupling;
    keys["physics"] = {{"lambda", num(c.lambda)}, {"order", integer(c.order)}, {"M", num(c.M)},
                       {"m", num(c.m)},           {"beta1", num(c.beta1)},     {"beta2", num(c.beta2)},
                       {"beta3", num(c.beta3)},   {"ell", num(c.ell)},         {"max_order", integer(c.max_order)}};
    keys["state"] = {{"kind", text_(sc.state)}, {"temperature", num(sc.temperature)}, {"path", text_(sc.state_path)}};
    keys["classical"] = {{"varsigma", [&](const std::string& v) { sc.varsigma = parse_profile(v); }},
                         {"varpi", [&](const std::string& v) { sc.varpi = parse_profile(v); }}};
    keys["mode"] = {{"kind", text_(sc.mode)}, {"t_restart", num(sc.t_restart)}};
    keys["output"] = {{"directory", text_(sc.directory)},
                      {"formats", [&](const std::string& v) { sc.formats = split_list(v); }},
                      {"stride", integer(sc.stride)},
                      {"timings", [&](const std::string& v) { sc.timings = parse_bool(v); }},
                      {"exec", [&](const std::string& v) {
                           if (v == "serial")
                               sc.exec = Exec::serial;
                           else if (v == "parallel")
                               sc.exec = Exec::parallel;
                           else
                               fail_validation("bad_exec", "exec must be serial or parallel");
                       }}};

    std::string section;
    std::set<std::string> seen;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::string where = "line " + std::to_string(lineno);
        if (line.front() == '[') {
            if (line.back() != ']') fail_parse("malformed_section", where + ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (!keys.count(section)) fail_parse("unknown_section", where + ": unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) fail_parse("malformed_line", where + ": expected key = value");
        if (section.empty()) fail_parse("no_section", where + ": key outside any section");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto& table = keys[section];
        const auto it = table.find(key);
        if (it == table.end()) fail_parse("unknown_key", where + ": unknown key '" + key + "' in [" + section + "]");
        if (!seen.insert(section + "." + key).second) fail_parse("duplicate_key", where + ": duplicate key '" + key + "'");
        if (value.empty()) fail_parse("empty_value", where + ": empty value for '" + key + "'");
        it->second(value);
    }
    sc.L = L;
    if (sc.n_x < 1 || !(L > 0.0)) fail_validation("bad_lattice", "n_x and L must be positive");
    sc.dt = dt_text ? eval_expression(*dt_text) : 0.9 * L / sc.n_x;
    if (!have_t_on) sc.t_on = sc.t_i + 0.5;
    if (!have_t_f) sc.t_f = sc.t_i + 0.5 * sc.n_t * sc.dt;
    if (sc.state != "vacuum" && sc.state != "thermal" && sc.state != "file")
        fail_validation("unknown_state", "state kind must be vacuum, thermal or file");
    if (sc.state == "file" && sc.state_path.empty()) fail_validation("missing_path", "file state needs a path");
    if (sc.mode != "switched" && sc.mode != "always_on_corrected" && sc.mode != "restart")
        fail_validation("unknown_mode", "mode must be switched, always_on_corrected or restart");
    if (sc.stride < 1) fail_validation("bad_stride", "stride must be positive");
    for (const auto& f : sc.formats)
        if (f != "csv" && f != "json") fail_validation("unknown_format", "formats are csv and json");
    return sc;
}

Scenario load_scenario(const std::string& path) {
    if (!std::filesystem::exists(path) && path.find('=') != std::string::npos) return parse_scenario(path);
    std::ifstream in(path);
    if (!in) fail_parse("unreadable_config", "cannot read config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str());
}

LatticeSpec scenario_lattice(const Scenario& s) {
    return make_lattice(s.n_x, s.L, s.dt, s.n_t, s.t_i, s.t_on, s.t_f);
}

namespace {

CMat read_block(const nlohmann::json& j, const char* name, int n) {
    if (!j.contains(name)) fail_parse("missing_block", std::string("state file lacks block ") + name);
    const auto& b = j[name];
    CMat m(n, n);
    const auto& re = b.at("re");
    const auto& im = b.at("im");
    if (static_cast<int>(re.size()) != n || static_cast<int>(im.size()) != n)
        fail_validation("size_mismatch", "state blocks must be n_x by n_x");
    for (int i = 0; i < n; ++i) {
        if (static_cast<int>(re[static_cast<std::size_t>(i)].size()) != n || static_cast<int>(im[static_cast<std::size_t>(i)].size()) != n)
            fail_validation("size_mismatch", "state blocks must be n_x by n_x");
        for (int k = 0; k < n; ++k)
            m(i, k) = cplx(re[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)].get<double>(),
                           im[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)].get<double>());
    }
    return m;
}

nlohmann::json write_block(const CMat& m) {
    nlohmann::json re = nlohmann::json::array(), im = nlohmann::json::array();
    for (int i = 0; i < m.rows(); ++i) {
        nlohmann::json r = nlohmann::json::array(), q = nlohmann::json::array();
        for (int k = 0; k < m.cols(); ++k) {
            r.push_back(m(i, k).real());
            q.push_back(m(i, k).imag());
        }
        re.push_back(r);
        im.push_back(q);
    }
    return {{"re", re}, {"im", im}};
}

}  // namespace

CauchyData2pt load_state_json(const std::string& path, const LatticeSpec& spec) {
    std::ifstream in(path);
    if (!in) fail_validation("unreadable_state", "cannot read state file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        fail_parse("bad_state_json", e.what());
    }
    const int n = spec.n_x;
    try {
        CauchyData2pt d{read_block(j, "phiphi", n), read_block(j, "phipi", n), read_block(j, "piphi", n),
                        read_block(j, "pipi", n)};
        return d;
    } catch (const nlohmann::json::exception& e) {
        fail_parse("bad_state_json", e.what());
    }
}

void save_state_json(const std::string& path, const CauchyData2pt& d) {
    nlohmann::json j{{"phiphi", write_block(d.phiphi)},
                     {"phipi", write_block(d.phipi)},
                     {"piphi", write_block(d.piphi)},
                     {"pipi", write_block(d.pipi)}};
    std::ofstream(path) << j.dump();
}

namespace {

CauchyData2pt make_state(const Scenario& s, const LatticeSpec& spec) {
    if (s.state == "vacuum") return vacuum_data(spec, s.coupling.m);
    if (s.state == "thermal") return thermal_data(spec, s.coupling.m, s.temperature);
    return load_state_json(s.state_path, spec);
}

int restart_index(const Scenario& s, const LatticeSpec& spec) {
    const int idx = static_cast<int>(std::lround((s.t_restart - spec.t_i) / spec.dt));
    if (idx < 1 || idx >= spec.n_t) fail_validation("restart_outside", "restart time outside the run window");
    return idx;
}

std::vector<int> sampled_slices(const LatticeSpec& spec, int stride) {
    std::vector<int> out;
    for (int n = 0; n <= spec.n_t; n += stride) out.push_back(n);
    if (out.back() != spec.n_t) out.push_back(spec.n_t);
    return out;
}

}  // namespace

RunResult execute(const Scenario& s, const TowerOptions& options) {
    const LatticeSpec spec = scenario_lattice(s);
    const CauchyData2pt data = make_state(s, spec);
    const Vec vs = s.varsigma.sample(spec), vp = s.varpi.sample(spec);
    const CouplingConfig& cfg = s.coupling;
    check_config(cfg);
    RunResult r;
    if (s.mode == "switched") {
        r.tower = solve_tower(spec, make_switching(spec, SwitchShape::bump), cfg, vs, vp, data, options);
    } else if (s.mode == "always_on_corrected") {
        TowerInitialData init;
        init.varsigma = {vs};
        init.varpi = {vp};
        init.blocks = correct_data(data, initial_subtraction(spec, cfg.m, vs, cfg.order), cfg.order);
        r.tower = solve_tower(spec, make_switching(spec, SwitchShape::constant_one), cfg, init, options);
    } else {
        const int idx = restart_index(s, spec);
        const SwitchingFunction chi = splice_constant_one(make_switching(spec, SwitchShape::bump), idx);
        TowerOptions head = options;
        head.block_slices.clear();
        for (int b : options.block_slices)
            if (b <= idx) head.block_slices.push_back(b);
        head.block_slices.push_back(idx);
        r.tower = solve_tower(head_lattice(spec, idx + 1), head_switching(chi, idx + 1), cfg, vs, vp, data, head);
        RestartData rd = restart(r.tower, idx);
        rd.tail = tail_lattice(spec, idx);
        TowerOptions tail = options;
        tail.block_slices.clear();
        for (int b : options.block_slices)
            if (b >= idx) tail.block_slices.push_back(b - idx);
        r.continuation = solve_tower(rd.tail, make_switching(rd.tail, SwitchShape::constant_one), cfg, rd.init, tail);
        r.restart_slice = idx;
    }
    return r;
}

namespace {

const SolutionTower& pick(const RunResult& r, int n, int& local) {
    if (r.continuation && n > r.restart_slice) {
        local = n - r.restart_slice;
        return *r.continuation;
    }
    local = n;
    return r.tower;
}

int total_slices(const RunResult& r) {
    return r.continuation ? r.restart_slice + r.continuation->spec.n_t + 1 : r.tower.spec.n_slices();
}

std::optional<CauchyData2pt> stitched_block(const RunResult& r, int k, int n) {
    int local = 0;
    const SolutionTower& t = pick(r, n, local);
    const auto it = t.blocks.find(local);
    if (it == t.blocks.end()) return std::nullopt;
    return it->second[static_cast<std::size_t>(k)];
}

}  // namespace

const Vec& stitched_psi(const RunResult& r, int k, int n) {
    int local = 0;
    const SolutionTower& t = pick(r, n, local);
    return t.psi[static_cast<std::size_t>(k)][static_cast<std::size_t>(local)];
}

const Vec& stitched_phi2(const RunResult& r, int k, int n) {
    int local = 0;
    const SolutionTower& t = pick(r, n, local);
    return t.phi2.orders[static_cast<std::size_t>(k)][static_cast<std::size_t>(local)];
}

RestartCheck restart_equivalence(const Scenario& s) {
    if (s.mode != "restart") fail_validation("not_restart", "restart check needs restart mode");
    if (s.state == "file") fail_validation("restart_refinement_unavailable", "refined state needs vacuum or thermal data");
    const LatticeSpec spec = scenario_lattice(s);
    const int idx = restart_index(s, spec);
    const CouplingConfig& cfg = s.coupling;
    const RunResult split = execute(s);

    auto unsplit = [&](const LatticeSpec& sp, int at) {
        const SwitchingFunction chi = splice_constant_one(make_switching(sp, SwitchShape::bump), at);
        return solve_tower(sp, chi, cfg, s.varsigma.sample(sp), s.varpi.sample(sp), make_state(s, sp));
    };
    const SolutionTower coarse = unsplit(spec, idx);
    const LatticeSpec fine_spec =
        make_lattice(2 * spec.n_x, spec.L, 0.5 * spec.dt, 2 * spec.n_t, spec.t_i, spec.t_on, spec.t_f);
    const SolutionTower fine = unsplit(fine_spec, 2 * idx);

    RestartCheck c;
    c.slice = idx;
    c.passes = true;
    for (int k = 0; k <= cfg.order; ++k) {
        const auto K = static_cast<std::size_t>(k);
        double split_err = 0.0, disc = 0.0;
        for (int n = idx; n <= spec.n_t; ++n) {
            const auto N = static_cast<std::size_t>(n);
            split_err = std::max({split_err, (stitched_psi(split, k, n) - coarse.psi[K][N]).cwiseAbs().maxCoeff(),
                                  (stitched_phi2(split, k, n) - coarse.phi2.orders[K][N]).cwiseAbs().maxCoeff()});
            for (int j = 0; j < spec.n_x; ++j) {
                const auto J = static_cast<Eigen::Index>(j);
                disc = std::max({disc, std::abs(coarse.psi[K][N][J] - fine.psi[K][2 * N][2 * J]),
                                 std::abs(coarse.phi2.orders[K][N][J] - fine.phi2.orders[K][2 * N][2 * J])});
            }
        }
        c.split_vs_unsplit.push_back(split_err);
        c.discretization.push_back(disc);
        c.passes = c.passes && split_err <= 10.0 * disc;
    }
    return c;
}

nlohmann::ordered_json config_echo(const Scenario& s, const LatticeSpec& spec) {
    nlohmann::ordered_json j;
    j["lattice"] = {{"n_x", spec.n_x},
                    {"L", spec.L},
                    {"dt", spec.dt},
                    {"n_t", spec.n_t},
                    {"t_i", spec.t_i},
                    {"t_on_requested", spec.t_on_requested},
                    {"t_f_requested", spec.t_f_requested},
                    {"t_on", spec.t_on},
                    {"t_f", spec.t_f},
                    {"on_index", spec.on_index},
                    {"f_index", spec.f_index},
                    {"dx", spec.dx()},
                    {"courant", spec.courant()}};
    const CouplingConfig& c = s.coupling;
    j["physics"] = {{"lambda", c.lambda}, {"order", c.order}, {"M", c.M},       {"m", c.m},
                    {"beta1", c.beta1},   {"beta2", c.beta2}, {"beta3", c.beta3}, {"ell", c.ell},
                    {"max_order", c.max_order}};
    j["state"] = {{"kind", s.state}, {"temperature", s.temperature}, {"path", s.state_path}};
    j["classical"] = {{"varsigma", s.varsigma.str()}, {"varpi", s.varpi.str()}};
    j["mode"] = {{"kind", s.mode}, {"t_restart", s.t_restart}};
    j["output"] = {{"directory", s.directory},
                   {"formats", s.formats},
                   {"stride", s.stride},
                   {"timings", s.timings},
                   {"exec", s.exec == Exec::serial ? "serial" : "parallel"}};
    return j;
}

namespace {

using Clock = std::chrono::steady_clock;

constexpr double kResidualFloor = 1e-8;
constexpr double kPointFloor = 1e-10;

struct Timer {
    nlohmann::ordered_json entries = nlohmann::ordered_json::object();
    Clock::time_point t0 = Clock::now();
    void mark(const std::string& name) {
        const auto t1 = Clock::now();
        entries[name] = std::chrono::duration<double>(t1 - t0).count();
        t0 = t1;
    }
};

nlohmann::ordered_json stability(const LatticeSpec& spec, const CouplingConfig& c, std::ostream& diag, bool& warned) {
    const double wdt = std::max(max_omega_dt(spec, c.m), max_omega_dt(spec, c.M));
    warned = false;
    if (spec.courant() >= 0.999) {
        diag << "WARN: marginal_cfl: courant number " << fmt(spec.courant()) << " at the stability bound\n";
        warned = true;
    }
    if (wdt >= 1.9) {
        diag << "WARN: marginal_frequency: largest w dt " << fmt(wdt) << " near the leapfrog limit 2\n";
        warned = true;
    }
    if (std::abs(c.lambda) >= 1.0) diag << "WARN: large_coupling: |lambda| >= 1\n";
    return {{"courant", spec.courant()}, {"max_omega_dt", wdt}, {"warning", warned}};
}

double max_drift(const RunResult& r) {
    double m = 0.0;
    for (double d : r.tower.ccr_drift) m = std::max(m, d);
    if (r.continuation)
        for (double d : r.continuation->ccr_drift) m = std::max(m, d);
    return m;
}

nlohmann::ordered_json drift_json(const RunResult& r) {
    auto per = nlohmann::ordered_json::array();
    const int ns = total_slices(r);
    for (int n = 0; n < ns; ++n) {
        int local = 0;
        const SolutionTower& t = pick(r, n, local);
        per.push_back(t.ccr_drift[static_cast<std::size_t>(local)]);
    }
    return {{"max", max_drift(r)}, {"tolerance", 1e-8}, {"pass", max_drift(r) < 1e-8}, {"per_step", per}};
}

bool decoupled_exact(const RunResult& r) {
    const SolutionTower& t = r.tower;
    const int last = std::min(t.spec.on_index, t.spec.n_t);
    for (int k = 1; k <= t.order(); ++k) {
        const auto K = static_cast<std::size_t>(k);
        for (int n = 0; n <= last; ++n) {
            const auto N = static_cast<std::size_t>(n);
            if (!t.psi[K][N].isZero(0.0) || !t.g_diag[K][N].isZero(0.0) || !t.h_diag[K][N].isZero(0.0) ||
                !t.phi2.orders[K][N].isZero(0.0))
                return false;
            const auto it = t.blocks.find(n);
            if (it != t.blocks.end() && it->second[K].max_abs() != 0.0) return false;
        }
    }
    return true;
}

double classical_res(const RunResult& r, double lambda, int t) {
    double v = classical_residual(r.tower, lambda, t);
    if (r.continuation) v = std::max(v, classical_residual(*r.continuation, lambda, t));
    return v;
}

double quantum_res(const RunResult& r, std::size_t a, std::size_t b) {
    double v = r.tower.quantum_residual[a][b];
    if (r.continuation) v = std::max(v, r.continuation->quantum_residual[a][b]);
    return v;
}

void write_field_csv(const std::string& path, const RunResult& r, const LatticeSpec& spec, int stride,
                     const std::function<const Vec&(int, int)>& get, int order) {
    std::ofstream out(path);
    out << "t,x,k,value\n";
    for (int n : sampled_slices(spec, stride))
        for (int k = 0; k <= order; ++k) {
            const Vec& v = get(k, n);
            for (int j = 0; j < spec.n_x; ++j)
                out << fmt(spec.time(n)) << ',' << fmt(j * spec.dx()) << ',' << k << ',' << fmt(v[j]) << '\n';
        }
    (void)r;
}

void write_blocks_csv(const std::string& path, const RunResult& r, const LatticeSpec& spec, int stride, int order) {
    std::ofstream out(path);
    out << "t,x,y,k,re,im\n";
    for (int n : sampled_slices(spec, stride))
        for (int k = 0; k <= order; ++k) {
            const auto b = stitched_block(r, k, n);
            if (!b) continue;
            for (int i = 0; i < spec.n_x; ++i)
                for (int j = 0; j < spec.n_x; ++j) {
                    const cplx z = b->phiphi(i, j);
                    out << fmt(spec.time(n)) << ',' << fmt(i * spec.dx()) << ',' << fmt(j * spec.dx()) << ',' << k
                        << ',' << fmt(z.real()) << ',' << fmt(z.imag()) << '\n';
                }
        }
}

void write_json(const std::string& path, const nlohmann::ordered_json& j) { std::ofstream(path) << j.dump(2) << '\n'; }

bool wants(const Scenario& s, const char* f) {
    return std::find(s.formats.begin(), s.formats.end(), f) != s.formats.end();
}

}  // namespace

int report_error(const std::exception& e, std::ostream& diag) {
    if (const auto* se = dynamic_cast<const Error*>(&e)) {
        diag << "ERROR: " << se->code() << ": " << se->what() << '\n';
        switch (se->kind()) {
        case ErrorKind::parse:
            return 2;
        case ErrorKind::validation:
            return 3;
        case ErrorKind::instability:
            return 4;
        }
    }
    diag << "ERROR: internal: " << e.what() << '\n';
    return 3;
}

int run_command(const std::string& config_path, std::ostream& diag) {
    try {
        Timer timer;
        const Scenario s = load_scenario(config_path);
        const LatticeSpec spec = scenario_lattice(s);
        bool warned = false;
        const auto stab = stability(spec, s.coupling, diag, warned);
        TowerOptions opt;
        opt.exec = s.exec;
        opt.block_slices = sampled_slices(spec, s.stride);
        for (int t = 1; t <= s.coupling.order; ++t) opt.probe.truncations.push_back(t);
        if (!opt.probe.truncations.empty()) opt.probe.lambdas = {s.coupling.lambda};
        timer.mark("setup");
        const RunResult r = execute(s, opt);
        timer.mark("solve");

        std::filesystem::create_directories(s.directory);
        const std::filesystem::path dir(s.directory);
        const int K = s.coupling.order;
        if (wants(s, "csv")) {
            write_field_csv((dir / "psi_k.csv").string(), r, spec, s.stride,
                            [&](int k, int n) -> const Vec& { return stitched_psi(r, k, n); }, K);
            write_field_csv((dir / "phi2_k.csv").string(), r, spec, s.stride,
                            [&](int k, int n) -> const Vec& { return stitched_phi2(r, k, n); }, K);
            write_blocks_csv((dir / "g_equal_time_k.csv").string(), r, spec, s.stride, K);
        }
        timer.mark("write_fields");

        nlohmann::ordered_json rep;
        rep["schema_version"] = kSchemaVersion;
        rep["command"] = "run";
        rep["config"] = config_echo(s, spec);
        rep["stability"] = stab;
        rep["ccr_drift"] = drift_json(r);
        auto res = nlohmann::ordered_json::array();
        for (std::size_t a = 0; a < opt.probe.truncations.size(); ++a) {
            const int t = opt.probe.truncations[a];
            res.push_back({{"order", t},
                           {"lambda", s.coupling.lambda},
                           {"classical", classical_res(r, s.coupling.lambda, t)},
                           {"quantum", quantum_res(r, a, 0)}});
        }
        rep["residuals"] = res;
        if (s.mode != "always_on_corrected") rep["decoupled_region_exact"] = decoupled_exact(r);
        if (r.continuation) rep["restart_slice"] = r.restart_slice;
        if (s.timings) {
            timer.mark("report");
            rep["timings"] = timer.entries;
        }
        if (wants(s, "json")) write_json((dir / "report.json").string(), rep);
        return 0;
    } catch (const std::exception& e) {
        return report_error(e, diag);
    }
}

int verify_command(const std::string& config_path, std::ostream& diag) {
    try {
        Timer timer;
        const Scenario s = load_scenario(config_path);
        const LatticeSpec spec = scenario_lattice(s);
        bool warned = false;
        const auto stab = stability(spec, s.coupling, diag, warned);
        const std::vector<double> grid{1e-3, 3e-3, 1e-2, 3e-2, 1e-1};
        TowerOptions opt;
        opt.exec = s.exec;
        for (int t = 1; t <= s.coupling.order; ++t) opt.probe.truncations.push_back(t);
        if (!opt.probe.truncations.empty()) opt.probe.lambdas = grid;
        const RunResult r = execute(s, opt);
        timer.mark("sweep");

        nlohmann::ordered_json rep;
        rep["schema_version"] = kSchemaVersion;
        rep["command"] = "verify";
        rep["config"] = config_echo(s, spec);
        rep["stability"] = stab;
        rep["ccr_drift"] = drift_json(r);
        bool all = max_drift(r) < 1e-8;

        auto sweep = nlohmann::ordered_json::array();
        for (std::size_t a = 0; a < opt.probe.truncations.size(); ++a) {
            const int t = opt.probe.truncations[a];
            std::vector<double> cl, qu;
            for (std::size_t b = 0; b < grid.size(); ++b) {
                cl.push_back(classical_res(r, grid[b], t));
                qu.push_back(quantum_res(r, a, b));
            }
            nlohmann::ordered_json entry{{"order", t}, {"classical", cl}, {"quantum", qu}, {"expected", t + 1}};
            bool pass = true;
            for (const auto* series : {&cl, &qu}) {
                const char* name = series == &cl ? "classical_slope" : "quantum_slope";
                if (*std::max_element(series->begin(), series->end()) <= kResidualFloor) {
                    entry[name] = nullptr;
                    continue;
                }
                std::vector<double> xs, ys;
                for (std::size_t i = 0; i < grid.size(); ++i)
                    if ((*series)[i] > kPointFloor) {
                        xs.push_back(grid[i]);
                        ys.push_back((*series)[i]);
                    }
                if (xs.size() < 3) {
                    entry[name] = nullptr;
                    continue;
                }
                const double slope = loglog_slope(xs, ys);
                entry[name] = slope;
                pass = pass && std::abs(slope - (t + 1)) <= 0.3;
            }
            entry["pass"] = pass;
            all = all && pass;
            sweep.push_back(entry);
        }
        rep["lambda_sweep"] = {{"lambdas", grid}, {"orders", sweep}};
        if (s.mode != "always_on_corrected") {
            const bool ok = decoupled_exact(r);
            rep["decoupled_region_exact"] = ok;
            all = all && ok;
        }
        if (s.mode == "restart") {
            const RestartCheck c = restart_equivalence(s);
            rep["restart_equivalence"] = {{"slice", c.slice},
                                          {"split_vs_unsplit", c.split_vs_unsplit},
                                          {"discretization", c.discretization},
                                          {"pass", c.passes}};
            all = all && c.passes;
        }
        rep["all_pass"] = all;
        if (s.timings) {
            timer.mark("report");
            rep["timings"] = timer.entries;
        }
        std::filesystem::create_directories(s.directory);
        write_json((std::filesystem::path(s.directory) / "report.json").string(), rep);
        if (!all) diag << "WARN: diagnostics_failed: see report.json\n";
        return all ? 0 : 1;
    } catch (const std::exception& e) {
        return report_error(e, diag);
    }
}

std::vector<h4d::PsiPolynomial> parse_psi_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        fail_parse("bad_psi_json", e.what());
    }
    if (!j.is_array()) fail_parse("bad_psi_json", "psi spec must be an array of orders");
    std::vector<h4d::PsiPolynomial> out;
    try {
        for (const auto& order : j) {
            h4d::PsiPolynomial p = h4d::PsiPolynomial::zero();
            p.known_degree = order.value("known_degree", -1);
            for (const auto& t : order.at("terms")) {
                const auto e = t.at("exponent").get<std::array<int, 4>>();
                for (int x : e)
                    if (x < 0) fail_validation("bad_exponent", "exponents must be nonnegative");
                const auto& c = t.at("coefficient");
                if (c.is_string()) {
                    const std::string s = c.get<std::string>();
                    const auto slash = s.find('/');
                    const long long num = std::stoll(s.substr(0, slash));
                    const long long den = slash == std::string::npos ? 1 : std::stoll(s.substr(slash + 1));
                    if (den == 0) fail_validation("bad_coefficient", "zero denominator");
                    p.add_term(e, h4d::Rat(num, den));
                } else {
                    p.add_term(e, c.get<double>());
                }
            }
            out.push_back(std::move(p));
        }
    } catch (const nlohmann::json::exception& e) {
        fail_parse("bad_psi_json", e.what());
    } catch (const std::invalid_argument&) {
        fail_parse("bad_psi_json", "bad rational coefficient");
    }
    return out;
}

nlohmann::ordered_json hadamard_table(const TableRequest& r) {
    const auto psi = parse_psi_json(r.psi_json);
    const h4d::HadamardCoeffs c = h4d::recursion_coeffs(r.m, psi, r.N, r.K, r.P, r.ell, r.ell_seed);
    nlohmann::ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["coefficients"] = h4d::to_json(c);
    j["short_distance"] = h4d::to_json(h4d::short_distance_expansion(r.m, r.ell, 1));
    const h4d::ScaleChange sc = h4d::make_scale_change(c.ell_seed, r.ell);
    j["scale_change"] = {{"ell0", sc.ell0}, {"ell", sc.ell}, {"alpha", sc.alpha}};
    return j;
}

int hadamard_table_command(const TableRequest& r, std::ostream& diag) {
    try {
        const auto j = hadamard_table(r);
        std::ofstream out(r.out);
        if (!out) fail_validation("unwritable_output", "cannot write '" + r.out + "'");
        out << j.dump(2) << '\n';
        return 0;
    } catch (const std::exception& e) {
        return report_error(e, diag);
    }
}

int main_entry(int argc, char** argv) {
    CLI::App app{"semiclassical lattice solver"};
    app.require_subcommand(1);
    std::string config;
    auto* run = app.add_subcommand("run", "solve a scenario and write fields and report.json");
    run->add_option("config", config, "scenario file")->required();
    auto* verify = app.add_subcommand("verify", "run the diagnostic suite and write report.json");
    verify->add_option("config", config, "scenario file")->required();
    TableRequest req;
    std::string psi_file;
    auto* table = app.add_subcommand("hadamard-table", "export flat-space Hadamard coefficients");
    table->add_option("--m", req.m, "mass");
    table->add_option("--ell", req.ell, "renormalization length");
    table->add_option("--ell-seed", req.ell_seed, "length inside the w00 convention (default: ell)");
    table->add_option("--N", req.N, "sigma order");
    table->add_option("--K", req.K, "lambda order");
    table->add_option("--P", req.P, "Taylor rank");
    table->add_option("--psi", req.psi_json, "psi tower as JSON");
    table->add_option("--psi-file", psi_file, "file holding the psi JSON");
    table->add_option("--out", req.out, "output file");
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "ERROR: bad_arguments: " << e.what() << '\n';
        return 2;
    }
    if (*run) return run_command(config, std::cerr);
    if (*verify) return verify_command(config, std::cerr);
    if (!psi_file.empty()) {
        std::ifstream in(psi_file);
        if (!in) {
            std::cerr << "ERROR: unreadable_psi: cannot read '" << psi_file << "'\n";
            return 2;
        }
        std::stringstream ss;
        ss << in.rdbuf();
        req.psi_json = ss.str();
    }
    return hadamard_table_command(req, std::cerr);
}

}  // namespace semicl::cli
