#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace hyperlat {

struct RecipeResult {
    std::string name;
    bool pass = false;
    nlohmann::json summary;
};

const std::vector<std::string>& recipe_names();

// Runs a canned experiment, writes curve.csv (or probe.csv), manifest.json
// and summary.json into out_dir, and returns the verdict. `scale` is "full"
// (default, verdict-grade replica counts) or "quick" (smoke test).
RecipeResult run_recipe(const std::string& name, const std::string& out_dir,
                        const std::string& scale = "full");

}  // namespace hyperlat
