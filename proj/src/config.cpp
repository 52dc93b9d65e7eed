#include "pseudotherm/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "pseudotherm/errors.hpp"

namespace pt {

using json = nlohmann::json;

std::vector<double> log_grid(double from, double to, std::size_t count) {
    if (!(from > 0) || !(to > from) || count < 2) throw InvalidArgument("log grid needs 0 < from < to, count >= 2");
    std::vector<double> v(count);
    const double a = std::log(from), b = std::log(to);
    for (std::size_t k = 0; k < count; ++k) v[k] = std::exp(a + (b - a) * double(k) / double(count - 1));
    v.front() = from;
    v.back() = to;
    return v;
}

std::vector<double> linear_grid(double from, double to, std::size_t count) {
    if (!(to > from) || count < 2) throw InvalidArgument("linear grid needs from < to, count >= 2");
    std::vector<double> v(count);
    for (std::size_t k = 0; k < count; ++k) v[k] = from + (to - from) * double(k) / double(count - 1);
    v.back() = to;
    return v;
}

namespace {

std::string format_number(double x) {
    // shortest text that reads back to the same double
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

class Reader {
public:
    Reader(const std::string& text, std::string origin) : text_(text), origin_(std::move(origin)) {}

    [[noreturn]] void fail(const std::string& path, const std::string& msg) const {
        std::ostringstream os;
        os << origin_;
        if (int line = line_of(path); line > 0) os << ":" << line;
        os << ": field '" << path << "': " << msg;
        throw ConfigError(os.str());
    }

    void only(const json& obj, const std::string& path, std::initializer_list<const char*> keys) const {
        if (!obj.is_object()) fail(path, "expected an object");
        std::set<std::string> allowed(keys.begin(), keys.end());
        for (auto it = obj.begin(); it != obj.end(); ++it)
            if (!allowed.count(it.key())) fail(join(path, it.key()), "unknown field");
    }

    double number(const json& obj, const std::string& path, const char* key, std::optional<double> fallback) const {
        const std::string p = join(path, key);
        if (!obj.contains(key)) {
            if (fallback) return *fallback;
            fail(p, "required");
        }
        const json& v = obj.at(key);
        if (!v.is_number()) fail(p, "expected a number");
        const double x = v.get<double>();
        if (!std::isfinite(x)) fail(p, "must be finite");
        return x;
    }

    std::size_t count(const json& obj, const std::string& path, const char* key, std::optional<std::size_t> fallback) const {
        const std::string p = join(path, key);
        if (!obj.contains(key)) {
            if (fallback) return *fallback;
            fail(p, "required");
        }
        const json& v = obj.at(key);
        if (!v.is_number_integer() || v.get<long long>() < 0) fail(p, "expected a non-negative integer");
        return v.get<std::size_t>();
    }

    std::string string(const json& obj, const std::string& path, const char* key, std::optional<std::string> fallback) const {
        const std::string p = join(path, key);
        if (!obj.contains(key)) {
            if (fallback) return *fallback;
            fail(p, "required");
        }
        if (!obj.at(key).is_string()) fail(p, "expected a string");
        return obj.at(key).get<std::string>();
    }

    bool boolean(const json& obj, const std::string& path, const char* key, bool fallback) const {
        if (!obj.contains(key)) return fallback;
        if (!obj.at(key).is_boolean()) fail(join(path, key), "expected true or false");
        return obj.at(key).get<bool>();
    }

    static std::string join(const std::string& path, const std::string& key) {
        return path.empty() ? key : path + "." + key;
    }

private:
    // locate the path's keys in order through the text; good enough for
    // pointing at the offending line of a hand-written file
    int line_of(const std::string& path) const {
        std::size_t pos = 0;
        std::stringstream ss(path);
        std::string seg;
        bool found = false;
        while (std::getline(ss, seg, '.')) {
            if (const auto br = seg.find('['); br != std::string::npos) seg = seg.substr(0, br);
            if (seg.empty()) continue;
            const auto at = text_.find("\"" + seg + "\"", pos);
            if (at == std::string::npos) break;
            pos = at;
            found = true;
        }
        if (!found) return 0;
        return 1 + int(std::count(text_.begin(), text_.begin() + std::ptrdiff_t(pos), '\n'));
    }

    const std::string& text_;
    std::string origin_;
};

ModelSpec parse_model(const Reader& r, const json& m, const std::string& path, double mass,
                      const std::optional<Protocol>& protocol, const std::string& base_dir) {
    (void)base_dir;
    const std::string kind = r.string(m, path, "kind", std::nullopt);
    try {
        if (kind == "two_level") {
            r.only(m, path, {"kind", "lambda", "gamma"});
            const double gamma = r.number(m, path, "gamma", 1.0);
            if (!(gamma > 0)) r.fail(path + ".gamma", "must be > 0");
            const double start = protocol ? protocol->start_value : 0.0;
            return ModelSpec::make_two_level(r.number(m, path, "lambda", start), gamma);
        }
        if (kind == "oscillator") {
            r.only(m, path, {"kind", "omega", "xi", "mass", "n_basis", "omega_ref"});
            OscillatorParams p;
            p.omega = protocol ? r.number(m, path, "omega", protocol->start_value) : r.number(m, path, "omega", std::nullopt);
            if (!(p.omega > 0)) r.fail(path + ".omega", "must be > 0");
            p.xi = r.number(m, path, "xi", 1.0);
            p.mass = r.number(m, path, "mass", mass);
            if (!(p.mass > 0)) r.fail(path + ".mass", "must be > 0");
            p.n_basis = r.count(m, path, "n_basis", 40);
            if (p.n_basis < 8 || p.n_basis > 400) r.fail(path + ".n_basis", "must lie in [8, 400]");
            // default: one fixed basis between the protocol endpoints
            double ref = p.omega;
            if (protocol && protocol->kind != ProtocolKind::Tabulated && protocol->start_value > 0 &&
                protocol->end_value > 0)
                ref = std::sqrt(protocol->start_value * protocol->end_value);
            p.omega_ref = r.number(m, path, "omega_ref", ref);
            if (!(p.omega_ref > 0)) r.fail(path + ".omega_ref", "must be > 0");
            return ModelSpec::make_oscillator(p);
        }
        if (kind == "hatano_nelson") {
            r.only(m, path, {"kind", "length", "hopping", "alpha", "potential", "boundary"});
            HatanoNelsonParams p;
            p.length = r.count(m, path, "length", std::nullopt);
            if (p.length < 2 || p.length > 400) r.fail(path + ".length", "must lie in [2, 400]");
            p.hopping = r.number(m, path, "hopping", 1.0);
            p.alpha = r.number(m, path, "alpha", 0.0);
            if (m.contains("potential")) {
                const json& v = m.at("potential");
                if (!v.is_array()) r.fail(path + ".potential", "expected a list of numbers");
                for (const auto& x : v) {
                    if (!x.is_number()) r.fail(path + ".potential", "expected a list of numbers");
                    p.potential.push_back(x.get<double>());
                }
                if (p.potential.size() != p.length) r.fail(path + ".potential", "length differs from 'length'");
            }
            const std::string b = r.string(m, path, "boundary", std::string("open"));
            if (b == "open")
                p.boundary = Boundary::Open;
            else if (b == "periodic")
                p.boundary = Boundary::Periodic;
            else
                r.fail(path + ".boundary", "expected \"open\" or \"periodic\"");
            return ModelSpec::make_hatano_nelson(p);
        }
    } catch (const InvalidArgument& e) {
        r.fail(path, e.what());
    }
    r.fail(path + ".kind", "expected \"two_level\", \"oscillator\" or \"hatano_nelson\"");
}

Protocol parse_protocol(const Reader& r, const json& p, const std::string& path) {
    const std::string kind = r.string(p, path, "kind", std::nullopt);
    try {
        if (kind == "linear" || kind == "constant") {
            r.only(p, path, {"kind", "start", "end", "duration"});
            const double d = r.number(p, path, "duration", 1.0);
            if (!(d > 0)) r.fail(path + ".duration", "must be > 0");
            const double s = r.number(p, path, "start", std::nullopt);
            return Protocol::linear(s, kind == "constant" ? s : r.number(p, path, "end", std::nullopt), d);
        }
        if (kind == "erf") {
            r.only(p, path, {"kind", "start", "end", "duration", "window"});
            const double d = r.number(p, path, "duration", 1.0);
            if (!(d > 0)) r.fail(path + ".duration", "must be > 0");
            const double w = r.number(p, path, "window", 3.0);
            if (!(w > 0)) r.fail(path + ".window", "must be > 0");
            return Protocol::erf(r.number(p, path, "start", std::nullopt), r.number(p, path, "end", std::nullopt), d, w);
        }
        if (kind == "tabulated") {
            r.only(p, path, {"kind", "samples"});
            if (!p.contains("samples") || !p.at("samples").is_array()) r.fail(path + ".samples", "expected [[t, value], ...]");
            std::vector<std::pair<double, double>> s;
            for (const auto& row : p.at("samples")) {
                if (!row.is_array() || row.size() != 2 || !row[0].is_number() || !row[1].is_number())
                    r.fail(path + ".samples", "expected [[t, value], ...]");
                s.emplace_back(row[0].get<double>(), row[1].get<double>());
            }
            return Protocol::tabulated(std::move(s));
        }
    } catch (const InvalidArgument& e) {
        r.fail(path, e.what());
    }
    r.fail(path + ".kind", "expected \"linear\", \"constant\", \"erf\" or \"tabulated\"");
}

SweepSpec parse_sweep(const Reader& r, const json& s, const std::string& path) {
    r.only(s, path, {"name", "values", "log_range", "linear_range"});
    SweepSpec sw;
    sw.name = r.string(s, path, "name", std::nullopt);
    if (sw.name != "tau" && sw.name != "lambda_f" && sw.name != "beta")
        r.fail(path + ".name", "expected \"tau\", \"lambda_f\" or \"beta\"");
    const int forms = int(s.contains("values")) + int(s.contains("log_range")) + int(s.contains("linear_range"));
    if (forms != 1) r.fail(path, "give exactly one of values, log_range, linear_range");
    if (s.contains("values")) {
        const json& v = s.at("values");
        if (!v.is_array()) r.fail(path + ".values", "expected a list of numbers");
        for (const auto& x : v) {
            if (!x.is_number() || !std::isfinite(x.get<double>())) r.fail(path + ".values", "values must be finite numbers");
            sw.values.push_back(x.get<double>());
        }
        if (sw.values.empty()) r.fail(path + ".values", "must not be empty");
        sw.description = sw.name + ":list x" + std::to_string(sw.values.size());
    } else {
        const bool log = s.contains("log_range");
        const std::string key = log ? "log_range" : "linear_range";
        const json& g = s.at(key);
        const std::string gp = path + "." + key;
        r.only(g, gp, {"from", "to", "count"});
        const double from = r.number(g, gp, "from", std::nullopt), to = r.number(g, gp, "to", std::nullopt);
        const std::size_t n = r.count(g, gp, "count", std::nullopt);
        if (n < 2) r.fail(gp + ".count", "must be >= 2");
        if (!(to > from)) r.fail(gp, "needs from < to");
        if (log && !(from > 0)) r.fail(gp + ".from", "must be > 0 on a log grid");
        sw.values = log ? log_grid(from, to, n) : linear_grid(from, to, n);
        sw.description = sw.name + ":" + (log ? "log[" : "linear[") + format_number(from) + "," + format_number(to) +
                         "]x" + std::to_string(n);
    }
    if (sw.name == "tau" || sw.name == "beta")
        for (double v : sw.values)
            if (!(v > 0)) r.fail(path + ".values", sw.name + " values must be > 0");
    return sw;
}

std::string fnv1a_hex(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& origin, const std::string& base_dir) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        const std::size_t at = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
        const auto line = 1 + std::count(text.begin(), text.begin() + std::ptrdiff_t(at), '\n');
        const auto nl = text.rfind('\n', at == 0 ? 0 : at - 1);
        const auto col = at - (nl == std::string::npos ? 0 : nl + 1) + 1;
        std::ostringstream os;
        os << origin << ":" << line << ":" << col << ": not valid JSON";
        throw ConfigError(os.str());
    }
    const Reader r(text, origin);
    r.only(root, "", {"model", "matrix_file", "protocol", "beta", "hbar", "mass", "propagation", "sweep", "output",
                      "seed", "cycle", "n_max", "samples", "limits", "description"});

    ExperimentConfig c;
    c.beta = r.number(root, "", "beta", 1.0);
    if (!(c.beta > 0)) r.fail("beta", "must be > 0");
    c.hbar = r.number(root, "", "hbar", 1.0);
    if (!(c.hbar > 0)) r.fail("hbar", "must be > 0");
    c.mass = r.number(root, "", "mass", 1.0);
    if (!(c.mass > 0)) r.fail("mass", "must be > 0");

    if (root.contains("protocol")) c.protocol = parse_protocol(r, root.at("protocol"), "protocol");
    if (root.contains("model")) c.model = parse_model(r, root.at("model"), "model", c.mass, c.protocol, base_dir);
    if (root.contains("matrix_file")) {
        std::filesystem::path p = r.string(root, "", "matrix_file", std::nullopt);
        if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
        c.matrix_file = p.string();
    }
    if (c.model && c.protocol && c.model->kind == ModelKind::Oscillator) {
        const double lo = std::min(c.protocol->start_value, c.protocol->end_value);
        if (!(lo > 0)) r.fail("protocol", "oscillator frequencies must stay > 0");
    }

    c.propagation.hbar = c.hbar;
    if (root.contains("propagation")) {
        const json& p = root.at("propagation");
        r.only(p, "propagation", {"steps", "max_steps", "tolerance", "unitarity_tolerance", "checkpoints", "integrator"});
        c.propagation.steps = r.count(p, "propagation", "steps", 64);
        if (c.propagation.steps < 1) r.fail("propagation.steps", "must be >= 1");
        c.propagation.max_steps = r.count(p, "propagation", "max_steps", std::size_t(1) << 20);
        if (c.propagation.max_steps < c.propagation.steps) r.fail("propagation.max_steps", "must be >= steps");
        c.propagation.tolerance = r.number(p, "propagation", "tolerance", 1e-8);
        if (!(c.propagation.tolerance > 0)) r.fail("propagation.tolerance", "must be > 0");
        c.propagation.unitarity_tolerance = r.number(p, "propagation", "unitarity_tolerance", 1e-8);
        if (!(c.propagation.unitarity_tolerance > 0)) r.fail("propagation.unitarity_tolerance", "must be > 0");
        c.propagation.checkpoints = r.count(p, "propagation", "checkpoints", 10);
        if (c.propagation.checkpoints < 10) r.fail("propagation.checkpoints", "must be >= 10");
        const std::string integ = r.string(p, "propagation", "integrator", std::string("rk4"));
        if (integ == "rk4")
            c.propagation.integrator = Integrator::Rk4;
        else if (integ == "magnus4")
            c.propagation.integrator = Integrator::Magnus4;
        else
            r.fail("propagation.integrator", "expected \"rk4\" or \"magnus4\"");
    }

    if (root.contains("sweep")) c.sweep = parse_sweep(r, root.at("sweep"), "sweep");

    if (root.contains("output")) {
        const json& o = root.at("output");
        r.only(o, "output", {"directory", "emit_svg"});
        c.output_directory = r.string(o, "output", "directory", c.output_directory);
        c.emit_svg = r.boolean(o, "output", "emit_svg", false);
    }

    if (root.contains("seed")) {
        const json& s = root.at("seed");
        if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0))
            r.fail("seed", "expected a non-negative 64-bit integer");
        c.seed = s.get<std::uint64_t>();
    }

    if (root.contains("cycle")) {
        const json& cy = root.at("cycle");
        r.only(cy, "cycle", {"T_hot", "T_cold", "steps", "corners"});
        CycleSpec s;
        s.T_hot = r.number(cy, "cycle", "T_hot", 2.0);
        s.T_cold = r.number(cy, "cycle", "T_cold", 1.0);
        if (!(s.T_cold > 0)) r.fail("cycle.T_cold", "must be > 0");
        if (!(s.T_hot > s.T_cold)) r.fail("cycle.T_hot", "must exceed T_cold");
        s.steps = r.count(cy, "cycle", "steps", 10000);
        if (s.steps < 100) r.fail("cycle.steps", "must be >= 100");
        if (!cy.contains("corners") || !cy.at("corners").is_array() || cy.at("corners").size() != 4)
            r.fail("cycle.corners", "expected four model objects A, B, C, D");
        for (std::size_t k = 0; k < 4; ++k) {
            const std::string p = "cycle.corners[" + std::to_string(k) + "]";
            s.corners[k] = parse_model(r, cy.at("corners")[k], p, c.mass, std::nullopt, base_dir);
            if (s.corners[k].kind != s.corners[0].kind) r.fail(p + ".kind", "all corners must share one model kind");
        }
        c.cycle = s;
    }

    if (root.contains("n_max")) {
        const json& v = root.at("n_max");
        if (!v.is_array() || v.empty()) r.fail("n_max", "expected a nonempty list of positive integers");
        for (const auto& x : v) {
            if (!x.is_number_integer() || x.get<long long>() < 1) r.fail("n_max", "expected positive integers");
            c.n_max.push_back(x.get<std::size_t>());
        }
    }
    c.samples = r.count(root, "", "samples", 100);
    if (c.samples < 1) r.fail("samples", "must be >= 1");

    if (root.contains("limits")) {
        const json& l = root.at("limits");
        r.only(l, "limits", {"jarzynski", "w_irr_floor", "w_irr_quasistatic", "partial_sum", "carnot", "carnot_excess",
                             "first_law", "probability", "row_sum", "relaxation", "biorthonormality",
                             "pseudo_hermiticity", "tail_mass"});
        auto& L = c.limits;
        const std::pair<const char*, double*> fields[] = {
            {"jarzynski", &L.jarzynski},     {"w_irr_floor", &L.w_irr_floor},
            {"w_irr_quasistatic", &L.w_irr_quasistatic}, {"partial_sum", &L.partial_sum},
            {"carnot", &L.carnot},           {"carnot_excess", &L.carnot_excess},
            {"first_law", &L.first_law},     {"probability", &L.probability},
            {"row_sum", &L.row_sum},         {"relaxation", &L.relaxation},
            {"biorthonormality", &L.biorthonormality}, {"pseudo_hermiticity", &L.pseudo_hermiticity},
            {"tail_mass", &L.tail_mass}};
        for (const auto& [key, dst] : fields) {
            *dst = r.number(l, "limits", key, *dst);
            if (std::string(key) != "w_irr_floor" && !(*dst > 0)) r.fail(std::string("limits.") + key, "must be > 0");
        }
    }

    json hashed = root;
    hashed.erase("output");
    c.hash = fnv1a_hex(hashed.dump());
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path + ": cannot open config file");
    std::stringstream ss;
    ss << in.rdbuf();
    const auto dir = std::filesystem::path(path).parent_path();
    return parse_config(ss.str(), path, dir.empty() ? "." : dir.string());
}

}  // namespace pt
