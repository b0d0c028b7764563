#include "pgdk/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "pgdk/errors.hpp"

namespace pgdk {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

bool parse_bool(const std::string& value) {
    if (value == "1" || value == "true" || value == "yes") return true;
    if (value == "0" || value == "false" || value == "no") return false;
    throw ConfigError("expected boolean, got '" + value + "'");
}

void set_key(TrainConfig& config, const std::string& key, const std::string& value) {
    try {
        if (key == "env") config.env = value;
        else if (key == "gamma") config.gamma = std::stod(value);
        else if (key == "alpha_f") config.alpha_f = std::stod(value);
        else if (key == "alpha_J") config.alpha_J = std::stod(value);
        else if (key == "alpha_mu") config.alpha_mu = std::stod(value);
        else if (key == "sqrt_decay") config.sqrt_decay = parse_bool(value);
        else if (key == "episodes") config.episodes = std::stoi(value);
        else if (key == "horizon") config.horizon = std::stoi(value);
        else if (key == "batch") config.batch = std::stoi(value);
        else if (key == "r") config.r = std::stoi(value);
        else if (key == "augment_state") config.augment_state = parse_bool(value);
        else if (key == "noise_sigma0") config.noise_sigma0 = std::stod(value);
        else if (key == "noise_decay") config.noise_decay = std::stod(value);
        else if (key == "seed") config.seed = std::stoull(value);
        else if (key == "grad_clip") config.grad_clip = std::stod(value);
        else if (key == "capacity") config.capacity = std::stoull(value);
        else if (key == "g_hidden") config.g_hidden = std::stoi(value);
        else if (key == "critic_hidden") config.critic_hidden = std::stoi(value);
        else if (key == "actor_hidden") config.actor_hidden = std::stoi(value);
        else if (key == "g_activation") config.g_activation = value;
        else if (key == "fit_tol") config.fit_tol = std::stod(value);
        else if (key.rfind("env.", 0) == 0) config.env_overrides[key.substr(4)] = std::stod(value);
        else throw ConfigError("unknown config key '" + key + "'");
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        throw ConfigError("unparsable value '" + value + "' for key '" + key + "'");
    }
}

}  // namespace

void apply_override(TrainConfig& config, const std::string& pair) {
    const auto eq = pair.find('=');
    if (eq == std::string::npos)
        throw ConfigError("override '" + pair + "' is not of the form key=value");
    set_key(config, trim(pair.substr(0, eq)), trim(pair.substr(eq + 1)));
}

TrainConfig parse_config(const std::string& path, const std::vector<std::string>& overrides) {
    TrainConfig config;
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file " + path);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            line = trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError(path + ":" + std::to_string(lineno) +
                                  ": expected key=value, got '" + line + "'");
            try {
                set_key(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
            } catch (const ConfigError& e) {
                throw ConfigError(path + ":" + std::to_string(lineno) + ": " + e.what());
            }
        }
    }
    for (const std::string& pair : overrides) apply_override(config, pair);
    config.validate();
    return config;
}

void write_manifest(const TrainConfig& config, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("write_manifest: cannot open " + path);
    out.precision(17);
    out << "env=" << config.env << '\n';
    out << "gamma=" << config.gamma << '\n';
    out << "alpha_f=" << config.alpha_f << '\n';
    out << "alpha_J=" << config.alpha_J << '\n';
    out << "alpha_mu=" << config.alpha_mu << '\n';
    out << "sqrt_decay=" << (config.sqrt_decay ? 1 : 0) << '\n';
    out << "episodes=" << config.episodes << '\n';
    out << "horizon=" << config.horizon << '\n';
    out << "batch=" << config.batch << '\n';
    out << "r=" << config.r << '\n';
    out << "augment_state=" << (config.augment_state ? 1 : 0) << '\n';
    out << "noise_sigma0=" << config.noise_sigma0 << '\n';
    out << "noise_decay=" << config.noise_decay << '\n';
    out << "seed=" << config.seed << '\n';
    out << "grad_clip=" << config.grad_clip << '\n';
    out << "capacity=" << config.capacity << '\n';
    out << "g_hidden=" << config.g_hidden << '\n';
    out << "critic_hidden=" << config.critic_hidden << '\n';
    out << "actor_hidden=" << config.actor_hidden << '\n';
    out << "g_activation=" << config.g_activation << '\n';
    out << "fit_tol=" << config.fit_tol << '\n';
    for (const auto& [key, value] : config.env_overrides)
        out << "env." << key << '=' << value << '\n';
}

}  // namespace pgdk
