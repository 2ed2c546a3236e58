// Copyright 2026 The microngp Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mngp/budget.hpp"
#include "mngp/dataset.hpp"
#include "mngp/federated.hpp"
#include "mngp/trainer.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace mngp {

struct ConfigKey {
    std::string name;
    std::string default_value;
    std::string help;
};

/// Flat key=value run configuration. Every key has a default; unknown keys are rejected.
/// Later assignments win, so loading a file and then applying flags gives flag > file > default.
class RunConfig {
public:
    RunConfig();

    static const std::vector<ConfigKey>& keys();
    static bool known(const std::string& key);

    void set(const std::string& key, const std::string& value);
    /// Parses `key = value` lines; '#' starts a comment.
    void load_file(const std::filesystem::path& path);
    void parse_text(const std::string& text, const std::string& origin = "<text>");

    const std::string& get(const std::string& key) const;
    int get_int(const std::string& key) const;
    std::uint64_t get_u64(const std::string& key) const;
    double get_double(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    std::vector<int> get_int_list(const std::string& key) const;

    /// Every key in registry order, `key = value` per line.
    std::string to_text() const;
    void write(const std::filesystem::path& path) const;

    TrainConfig train() const;
    FederationConfig federation() const;
    LoadOptions load_options() const;
    SceneSpec scene_spec() const;
    std::vector<SweepPoint> sweep_points() const;

private:
    std::map<std::string, std::string> values_;
};

}  // namespace mngp
