#include "delay_spde/config.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace delay_spde {

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

struct Reader {
    std::map<std::string, std::string> kv;

    std::string need(const std::string& key) {
        auto it = kv.find(key);
        if (it == kv.end()) throw parse_error("config: missing key " + key);
        std::string v = it->second;
        kv.erase(it);
        return v;
    }
    double num(const std::string& key) {
        const std::string v = need(key);
        std::size_t used = 0;
        double out;
        try {
            out = std::stod(v, &used);
        } catch (const std::exception&) {
            throw parse_error("config: bad number for " + key + ": " + v);
        }
        if (used != v.size()) throw parse_error("config: trailing junk in " + key + ": " + v);
        return out;
    }
    int integer(const std::string& key) {
        const double v = num(key);
        const int i = static_cast<int>(v);
        if (static_cast<double>(i) != v) throw parse_error("config: expected integer for " + key);
        return i;
    }
    std::uint64_t u64(const std::string& key) {
        const std::string v = need(key);
        try {
            return std::stoull(v);
        } catch (const std::exception&) {
            throw parse_error("config: bad unsigned value for " + key + ": " + v);
        }
    }
    bool flag(const std::string& key) {
        const std::string v = need(key);
        if (v == "true" || v == "1") return true;
        if (v == "false" || v == "0") return false;
        throw parse_error("config: expected true/false for " + key + ": " + v);
    }
};

} // namespace

std::string RunConfig::serialize() const {
    std::ostringstream out;
    out << "[problem]\n";
    out << "kind = " << kind << "\n";
    out << "\n[custom]\n";
    out << "drift = " << custom_drift << "\n";
    out << "diffusion = " << custom_diffusion << "\n";
    out << "\n[heatmem]\n";
    out << "length = " << fmt_double(length) << "\n";
    out << "kappa_f = " << fmt_double(kappa_f) << "\n";
    out << "sat_f = " << fmt_double(sat_f) << "\n";
    out << "c0 = " << fmt_double(c0) << "\n";
    out << "q = " << fmt_double(q) << "\n";
    out << "diffusion_saturate = " << (diffusion_saturate ? "true" : "false") << "\n";
    out << "history_rate = " << fmt_double(history_rate) << "\n";
    out << "history_scale = " << fmt_double(history_scale) << "\n";
    out << "\n[discretization]\n";
    out << "modes = " << modes << "\n";
    out << "quad_points = " << quad_points << "\n";
    out << "steps = " << steps << "\n";
    out << "history_cells = " << history_cells << "\n";
    out << "history_radius = " << fmt_double(history_radius) << "\n";
    out << "history_stretch = " << fmt_double(history_stretch) << "\n";
    out << "eps_tail = " << fmt_double(eps_tail) << "\n";
    out << "\n[stochastics]\n";
    out << "seed = " << seed << "\n";
    out << "paths = " << paths << "\n";
    out << "noise_modes = " << noise_modes << "\n";
    out << "\n[solver]\n";
    out << "tol = " << fmt_double(tol) << "\n";
    out << "max_iter = " << max_iter << "\n";
    out << "alpha = " << fmt_double(alpha) << "\n";
    out << "p = " << fmt_double(p) << "\n";
    out << "flavor = " << flavor << "\n";
    out << "horizon = " << fmt_double(horizon) << "\n";
    out << "\n[vnorm]\n";
    out << "t_subgrid = " << t_subgrid << "\n";
    out << "gamma_samples = " << gamma_samples << "\n";
    out << "\n[verify]\n";
    out << "band_scale = " << fmt_double(band_scale) << "\n";
    out << "anticipating_b = " << (anticipating_b ? "true" : "false") << "\n";
    out << "\n[outputs]\n";
    out << "directory = " << directory << "\n";
    out << "write_paths = " << write_paths << "\n";
    return out.str();
}

RunConfig RunConfig::parse(const std::string& text) {
    std::map<std::string, Reader> sections;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']') throw parse_error("config: malformed section at line " +
                                                   std::to_string(lineno));
            section = t.substr(1, t.size() - 2);
            sections[section];
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw parse_error("config: expected key = value at line " + std::to_string(lineno));
        if (section.empty())
            throw parse_error("config: key outside a section at line " + std::to_string(lineno));
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (!sections[section].kv.emplace(key, value).second)
            throw parse_error("config: duplicate key " + section + "." + key);
    }

    const char* known[] = {"problem", "custom", "heatmem", "discretization", "stochastics",
                           "solver", "vnorm", "verify", "outputs"};
    for (const auto& [name, reader] : sections) {
        bool ok = false;
        for (const char* k : known) ok = ok || (name == k);
        if (!ok) throw parse_error("config: unknown section [" + name + "]");
        (void)reader;
    }

    RunConfig cfg;
    auto sec = [&](const char* name) -> Reader& { return sections[name]; };
    cfg.kind = sec("problem").need("kind");
    cfg.custom_drift = sec("custom").need("drift");
    cfg.custom_diffusion = sec("custom").need("diffusion");
    auto& hm = sec("heatmem");
    cfg.length = hm.num("length");
    cfg.kappa_f = hm.num("kappa_f");
    cfg.sat_f = hm.num("sat_f");
    cfg.c0 = hm.num("c0");
    cfg.q = hm.num("q");
    cfg.diffusion_saturate = hm.flag("diffusion_saturate");
    cfg.history_rate = hm.num("history_rate");
    cfg.history_scale = hm.num("history_scale");
    auto& disc = sec("discretization");
    cfg.modes = disc.integer("modes");
    cfg.quad_points = disc.integer("quad_points");
    cfg.steps = disc.integer("steps");
    cfg.history_cells = disc.integer("history_cells");
    cfg.history_radius = disc.num("history_radius");
    cfg.history_stretch = disc.num("history_stretch");
    cfg.eps_tail = disc.num("eps_tail");
    auto& sto = sec("stochastics");
    cfg.seed = sto.u64("seed");
    cfg.paths = sto.integer("paths");
    cfg.noise_modes = sto.integer("noise_modes");
    auto& sol = sec("solver");
    cfg.tol = sol.num("tol");
    cfg.max_iter = sol.integer("max_iter");
    cfg.alpha = sol.num("alpha");
    cfg.p = sol.num("p");
    cfg.flavor = sol.need("flavor");
    cfg.horizon = sol.num("horizon");
    auto& vn = sec("vnorm");
    cfg.t_subgrid = vn.integer("t_subgrid");
    cfg.gamma_samples = vn.integer("gamma_samples");
    auto& ver = sec("verify");
    cfg.band_scale = ver.num("band_scale");
    cfg.anticipating_b = ver.flag("anticipating_b");
    auto& outs = sec("outputs");
    cfg.directory = outs.need("directory");
    cfg.write_paths = outs.integer("write_paths");

    for (const auto& [name, reader] : sections)
        if (!reader.kv.empty())
            throw parse_error("config: unknown key " + name + "." + reader.kv.begin()->first);

    cfg.validate();
    return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw parse_error("config: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

std::uint64_t RunConfig::hash() const {
    const std::string text = serialize();
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    return h;
}

void RunConfig::validate() const {
    if (kind != "heatmem" && kind != "custom")
        throw parse_error("config: problem.kind must be heatmem or custom");
    if (kind == "custom") {
        if (custom_drift != "none" && custom_drift != "memory" && custom_drift != "head")
            throw parse_error("config: custom.drift must be none, memory or head");
        if (custom_diffusion != "none" && custom_diffusion != "additive" &&
            custom_diffusion != "memory")
            throw parse_error("config: custom.diffusion must be none, additive or memory");
    }
    if (flavor != "sup" && flavor != "integrated")
        throw parse_error("config: solver.flavor must be sup or integrated");
    if (!(p > 2.0)) throw parse_error("config: solver.p must exceed 2");
    if (!(alpha > 1.0 / p && alpha < 0.5))
        throw parse_error("config: solver.alpha must lie in (1/p, 1/2)");
    if (q <= 0.5) throw parse_error("config: heatmem.q must exceed 1/2");
    if (modes < 1 || quad_points < modes) throw parse_error("config: need quad_points >= modes >= 1");
    if (steps < 2) throw parse_error("config: discretization.steps must be >= 2");
    if (history_cells < 2) throw parse_error("config: discretization.history_cells must be >= 2");
    if (paths < 1) throw parse_error("config: stochastics.paths must be >= 1");
    if (horizon <= 0.0) throw parse_error("config: solver.horizon must be positive");
    if (eps_tail <= 0.0) throw parse_error("config: discretization.eps_tail must be positive");
    if (write_paths < 0) throw parse_error("config: outputs.write_paths must be >= 0");
}

} // namespace delay_spde
