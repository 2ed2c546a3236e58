// Copyright 2026 The microngp Authors
// SPDX-License-Identifier: Apache-2.0
#include "mngp/synthetic.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Write a procedural scene in NeRF-synthetic layout"};
    mngp::SyntheticOptions opt;
    std::string out;
    app.add_option("out", out, "destination directory")->required();
    app.add_option("--width", opt.width, "image width and height")->capture_default_str();
    app.add_option("--train", opt.train_frames, "training views")->capture_default_str();
    app.add_option("--test", opt.test_frames, "test views")->capture_default_str();
    app.add_option("--seed", opt.seed, "pose seed")->capture_default_str();
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }
    try {
        mngp::write_synthetic_scene(out, opt);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    std::cout << "wrote " << out << "\n";
    return 0;
}
