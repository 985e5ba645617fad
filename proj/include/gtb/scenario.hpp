#pragma once

#include <string>
#include <vector>

#include "gtb/common.hpp"

namespace gtb::scenario {

enum class Terrain : unsigned char {
  kEmpty = 0,
  kWater = 1,
  kStoneSource = 2,
  kWoodSource = 3,
};

// A parsed scenario map: world geometry, per-agent skills, start positions.
// Scenario files carry explicit skill lists so a map is fully reproducible
// without any distributional assumptions.
struct ScenarioSpec {
  std::string name;
  int height = 0;
  int width = 0;
  int num_agents = 0;
  std::vector<double> build_skills;   // coin per house, one per agent
  std::vector<double> gather_skills;  // bonus-unit probability, one per agent
  std::vector<Terrain> terrain;       // row-major height*width
  std::vector<int> start_row, start_col;

  Terrain at(int r, int c) const { return terrain[static_cast<std::size_t>(r) * width + c]; }
};

// Parses the plain-text scenario format:
//
//   # comment
//   name=open-quadrant-4
//   height=25
//   width=25
//   agents=4
//   build_skills=11.2,13.9,16.5,22.2
//   gather_skills=0.05,0.12,0.33,0.41
//   map=
//   WWWW...
//
// The map block must contain exactly `height` rows of exactly `width`
// characters from {W,S,T,.,0-9}; digit k marks agent k's start cell and
// each agent must appear exactly once. Any deviation is a ConfigError.
ScenarioSpec parse_scenario(const std::string& text);
ScenarioSpec load_scenario(const std::string& path);

std::string serialize_scenario(const ScenarioSpec& spec);

}  // namespace gtb::scenario
