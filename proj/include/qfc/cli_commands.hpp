// Command implementations behind the `qfc` binary. Every command is a pure
// function of (settings, input files): reruns produce byte-identical outputs.
#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace qfc::cli {

// Flat keyed settings ("section.key" -> string). Precedence, lowest to
// highest: scenario defaults, config file, --set pairs, dedicated flags.
class Settings {
  public:
    void set(const std::string& key, const std::string& value) { kv_[key] = value; }
    bool has(const std::string& key) const { return kv_.count(key) != 0; }

    std::string get_str(const std::string& key, const std::string& fallback) const;
    double get_num(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    std::vector<double> get_list(const std::string& key) const;  // comma-separated

    // Numeric overrides under "scenario." (excluding scenario.name).
    std::map<std::string, double> scenario_overrides() const;

    const std::map<std::string, std::string>& all() const { return kv_; }

  private:
    std::map<std::string, std::string> kv_;
};

// INI-style config: [section] headers, key = value pairs, # comments.
Settings load_config_file(const std::string& path);
void apply_set_pairs(Settings& s, const std::vector<std::string>& pairs);

int cmd_simulate(const Settings& s, const std::string& out_dir);
int cmd_estimate(const Settings& s, const std::string& record_path, const std::string& out_dir);
int cmd_control(const Settings& s, const std::string& out_dir);
int cmd_sweep(const Settings& s, const std::string& out_dir);
int cmd_train(const Settings& s, const std::string& out_dir);

}  // namespace qfc::cli
