#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ebind/binding.hpp"
#include "ebind/errors.hpp"
#include "ebind/lattice.hpp"
#include "ebind/system.hpp"

namespace ebind::cli {

// Semantic problem in a run spec that the schema cannot express.
class spec_error : public ebind::error {
public:
    spec_error(std::string path, const std::string& what) : error(path + ": " + what), path_(std::move(path)) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

// Reads obj[key], storing `fallback` there first when absent, so the object
// ends up fully resolved.
double take_number(nlohmann::json& obj, const char* key, double fallback);
std::int64_t take_integer(nlohmann::json& obj, const char* key, std::int64_t fallback);
bool take_bool(nlohmann::json& obj, const char* key, bool fallback);
std::string take_string(nlohmann::json& obj, const char* key, const std::string& fallback);
std::vector<double> take_numbers(nlohmann::json& obj, const char* key, const std::vector<double>& fallback);

RadialPotential parse_potential(const nlohmann::json& j, const std::string& path);
CutoffProfile parse_profile(const nlohmann::json& j, int d, const std::string& path);
// Expands particle counts; `system` is rewritten with one entry per particle.
ParticleSystem parse_system(nlohmann::json& system, const std::string& path);
GridRecipe parse_recipe(nlohmann::json& grid, nlohmann::json& solver);

nlohmann::json to_json(const GridSpec& g);
nlohmann::json to_json(const ClusterEnergy& c);

std::string format_number(double x);
std::string format_cluster(const std::vector<std::size_t>& beta);  // 1-based, space separated

// Fixed-column CSV body; cells are preformatted strings.
struct CsvTable {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    void add(std::vector<std::string> row);
    std::string render() const;
};

std::string fnv1a64_hex(const std::string& bytes);

}  // namespace ebind::cli
