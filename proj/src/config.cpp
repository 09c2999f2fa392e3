#include "shred/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "shred/error.hpp"

namespace shred {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, ',');) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
    T v{};
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc{} || ptr != end) throw ConfigError(key + ": cannot parse '" + text + "'");
    return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    throw ConfigError(key + ": expected true/false, got '" + text + "'");
}

std::string fmt(double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, r.ptr};
}
std::string fmt(std::size_t v) { return std::to_string(v); }
std::string fmt(std::uint64_t v, int) { return std::to_string(v); }
std::string fmt(bool v) { return v ? "true" : "false"; }

template <typename T>
std::string join(const std::vector<T>& xs, const std::function<std::string(const T&)>& f) {
    std::string out;
    for (std::size_t k = 0; k < xs.size(); ++k) out += (k ? "," : "") + f(xs[k]);
    return out;
}

std::string perturbation_text(const synthgen::Perturbation& p) {
    const char* name = p.kind == synthgen::PerturbationKind::HeaterScale        ? "heater_scale"
                       : p.kind == synthgen::PerturbationKind::TopRecirculation ? "top_recirculation"
                                                                                : "viscosity_scale";
    return std::string(name) + "=" + fmt(p.value);
}

struct Key {
    std::string name;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

#define SHRED_DOUBLE(KEY, FIELD)                                                                         \
    Key{KEY, [](RunConfig& c, const std::string& v) { c.FIELD = parse_number<double>(KEY, v); },        \
        [](const RunConfig& c) { return fmt(c.FIELD); }}
#define SHRED_SIZE(KEY, FIELD)                                                                           \
    Key{KEY, [](RunConfig& c, const std::string& v) { c.FIELD = parse_number<std::size_t>(KEY, v); },   \
        [](const RunConfig& c) { return fmt(c.FIELD); }}
#define SHRED_BOOL(KEY, FIELD)                                                                           \
    Key{KEY, [](RunConfig& c, const std::string& v) { c.FIELD = parse_bool(KEY, v); },                  \
        [](const RunConfig& c) { return fmt(c.FIELD); }}

const std::vector<Key>& schema() {
    static const std::vector<Key> keys = {
        Key{"run.seed", [](RunConfig& c, const std::string& v) { c.seed = parse_number<std::uint64_t>("run.seed", v); },
            [](const RunConfig& c) { return fmt(c.seed, 0); }},
        Key{"run.out", [](RunConfig& c, const std::string& v) { c.out = v; },
            [](const RunConfig& c) { return c.out.string(); }},

        SHRED_SIZE("solver.nx", solver.nx),
        SHRED_SIZE("solver.ny", solver.ny),
        SHRED_DOUBLE("solver.lx", solver.lx),
        SHRED_DOUBLE("solver.ly", solver.ly),
        SHRED_DOUBLE("solver.dt", solver.dt),
        SHRED_DOUBLE("solver.nu", solver.nu),
        SHRED_DOUBLE("solver.alpha", solver.alpha),
        SHRED_DOUBLE("solver.beta", solver.beta),
        SHRED_DOUBLE("solver.gravity", solver.gravity),
        SHRED_DOUBLE("solver.t_ref", solver.t_ref),
        SHRED_DOUBLE("solver.t_init", solver.t_init),
        SHRED_DOUBLE("solver.t_top", solver.t_top),
        SHRED_BOOL("solver.top_dirichlet", solver.top_dirichlet),
        SHRED_DOUBLE("solver.heater_scale", solver.heater_scale),
        SHRED_DOUBLE("solver.flux_a", solver.flux.a),
        SHRED_DOUBLE("solver.flux_b", solver.flux.b),
        SHRED_DOUBLE("solver.flux_c", solver.flux.c),
        SHRED_DOUBLE("solver.flux_d", solver.flux.d),
        SHRED_SIZE("solver.steps", solver.steps),
        SHRED_SIZE("solver.stride", solver.stride),
        SHRED_DOUBLE("solver.poisson_tol", solver.poisson_tol),
        SHRED_DOUBLE("solver.c_kappa", solver.c_kappa),
        SHRED_DOUBLE("solver.recirc_strength", solver.recirc_strength),

        SHRED_DOUBLE("data.energy", data.energy),
        SHRED_SIZE("data.rank", data.common_rank),
        SHRED_DOUBLE("data.train", data.ratios.train),
        SHRED_DOUBLE("data.valid", data.ratios.valid),
        SHRED_DOUBLE("data.test", data.ratios.test),

        Key{"sensing.channel",
            [](RunConfig& c, const std::string& v) {
                if (v != "ext" && v != "reg") throw ConfigError("sensing.channel must be ext or reg, got '" + v + "'");
                c.channel = v;
            },
            [](const RunConfig& c) { return c.channel; }},
        SHRED_SIZE("sensing.sensors", ensemble.sensors),
        SHRED_SIZE("sensing.lags", ensemble.lag),
        SHRED_DOUBLE("sensing.sigma", ensemble.sigma),
        Key{"sensing.noise", [](RunConfig& c, const std::string& v) { c.ensemble.noise_mode = parse_noise_mode(v); },
            [](const RunConfig& c) { return to_string(c.ensemble.noise_mode); }},
        SHRED_SIZE("sensing.ext_column", channels.ext_column),
        SHRED_SIZE("sensing.reg_column", channels.reg_column),
        SHRED_SIZE("sensing.positions", channels.n_positions),
        SHRED_SIZE("sensing.row_first", channels.row_first),
        SHRED_SIZE("sensing.row_last", channels.row_last),

        SHRED_SIZE("ensemble.members", ensemble.members),
        SHRED_SIZE("ensemble.threads", ensemble.threads),

        SHRED_SIZE("network.hidden", ensemble.hidden),
        SHRED_SIZE("network.lstm_layers", ensemble.lstm_layers),
        Key{"network.decoder",
            [](RunConfig& c, const std::string& v) {
                c.ensemble.decoder_widths.clear();
                for (const auto& w : split_list(v)) {
                    c.ensemble.decoder_widths.push_back(parse_number<std::size_t>("network.decoder", w));
                }
            },
            [](const RunConfig& c) {
                return join<std::size_t>(c.ensemble.decoder_widths, [](const std::size_t& w) { return fmt(w); });
            }},

        SHRED_DOUBLE("train.learning_rate", ensemble.train.learning_rate),
        SHRED_SIZE("train.epochs", ensemble.train.epochs),
        SHRED_SIZE("train.batch_size", ensemble.train.batch_size),
        SHRED_SIZE("train.patience", ensemble.train.patience),
        SHRED_BOOL("train.init_output_bias", ensemble.train.init_output_bias),

        Key{"update.perturb",
            [](RunConfig& c, const std::string& v) {
                c.perturbations.clear();
                for (const auto& p : split_list(v)) c.perturbations.push_back(synthgen::parse_perturbation(p));
            },
            [](const RunConfig& c) {
                return join<synthgen::Perturbation>(c.perturbations, perturbation_text);
            }},
    };
    return keys;
}

#undef SHRED_DOUBLE
#undef SHRED_SIZE
#undef SHRED_BOOL

} // namespace

KeyValueFile KeyValueFile::parse(const std::string& text, const std::string& origin) {
    KeyValueFile f;
    f.origin_ = origin;
    std::istringstream is(text);
    std::string section;
    int line_no = 0;
    for (std::string line; std::getline(is, line);) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        auto where = [&] { return origin + ":" + std::to_string(line_no) + ": "; };
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where() + "unterminated section header");
            section = trim(std::string_view(line).substr(1, line.size() - 2));
            if (section.empty()) throw ConfigError(where() + "empty section name");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(where() + "expected key = value");
        const auto key = trim(std::string_view(line).substr(0, eq));
        const auto value = trim(std::string_view(line).substr(eq + 1));
        if (key.empty()) throw ConfigError(where() + "empty key");
        if (section.empty()) throw ConfigError(where() + "key '" + key + "' outside any section");
        const auto full = section + "." + key;
        if (f.entries_.count(full)) throw ConfigError(where() + "duplicate key '" + full + "'");
        f.entries_[full] = value;
        f.lines_[full] = line_no;
    }
    return f;
}

KeyValueFile KeyValueFile::read(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read config " + path.string());
    std::stringstream ss;
    ss << is.rdbuf();
    return parse(ss.str(), path.string());
}

std::optional<std::string> KeyValueFile::get(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

int KeyValueFile::line_of(const std::string& key) const {
    const auto it = lines_.find(key);
    return it == lines_.end() ? 0 : it->second;
}

std::vector<std::string> known_keys() {
    std::vector<std::string> out;
    for (const auto& k : schema()) out.push_back(k.name);
    return out;
}

RunConfig make_config(const KeyValueFile& file, bool honour_environment) {
    RunConfig c;
    const auto& keys = schema();
    for (const auto& [name, value] : file.entries()) {
        const auto it = std::find_if(keys.begin(), keys.end(), [&](const Key& k) { return k.name == name; });
        const auto where = file.origin() + ":" + std::to_string(file.line_of(name)) + ": ";
        if (it == keys.end()) throw ConfigError(where + "unknown key '" + name + "'");
        try {
            it->set(c, value);
        } catch (const ConfigError& e) {
            throw ConfigError(where + e.what());
        } catch (const Error& e) {
            throw ConfigError(where + e.what());
        }
    }
    if (honour_environment) {
        if (const char* env = std::getenv("SHRED_SEED"); env && *env) {
            c.seed = parse_number<std::uint64_t>("SHRED_SEED", env);
        }
    }
    c.ensemble.master_seed = c.seed;
    c.solver.seed = c.seed;
    if (!(c.data.energy > 0.0 && c.data.energy < 1.0)) {
        throw ConfigError("data.energy must be in (0, 1)");
    }
    {
        const auto& r = c.data.ratios;
        if (r.train < 0 || r.valid < 0 || r.test < 0 || std::abs(r.train + r.valid + r.test - 1.0) > 1e-9) {
            throw ConfigError("data.train/valid/test must be non-negative and sum to 1");
        }
    }
    if (c.ensemble.sensors == 0) throw ConfigError("sensing.sensors must be positive");
    if (c.ensemble.sigma < 0.0) throw ConfigError("sensing.sigma must be non-negative");
    c.ensemble.train.validate();
    synthgen::validate(c.solver);
    return c;
}

RunConfig load_config(const std::filesystem::path& path, bool honour_environment) {
    auto c = make_config(KeyValueFile::read(path), honour_environment);
    c.source = path;
    return c;
}

std::string to_text(const RunConfig& config) {
    std::string out;
    std::string section;
    for (const auto& k : schema()) {
        const auto dot = k.name.find('.');
        const auto sec = k.name.substr(0, dot);
        if (sec != section) {
            out += (section.empty() ? "" : "\n") + ("[" + sec + "]\n");
            section = sec;
        }
        out += k.name.substr(dot + 1) + " = " + k.get(config) + "\n";
    }
    return out;
}

} // namespace shred
