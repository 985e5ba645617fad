#include "gtb/scenario.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace gtb::scenario {

namespace {

std::vector<double> parse_double_list(const std::string& value, const std::string& key) {
  std::vector<double> out;
  std::istringstream in(value);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    std::size_t pos = 0;
    double v;
    try {
      v = std::stod(tok, &pos);
    } catch (const std::exception&) {
      throw ConfigError("scenario: bad number in " + key + ": \"" + tok + "\"");
    }
    if (pos != tok.size()) {
      throw ConfigError("scenario: bad number in " + key + ": \"" + tok + "\"");
    }
    out.push_back(v);
  }
  return out;
}

int parse_int_field(const std::string& value, const std::string& key) {
  std::size_t pos = 0;
  int v;
  try {
    v = std::stoi(value, &pos);
  } catch (const std::exception&) {
    throw ConfigError("scenario: bad integer for " + key);
  }
  if (pos != value.size()) throw ConfigError("scenario: bad integer for " + key);
  return v;
}

}  // namespace

ScenarioSpec parse_scenario(const std::string& text) {
  ScenarioSpec spec;
  std::istringstream in(text);
  std::string line;
  bool saw_map = false;
  int line_no = 0;

  auto fail = [&](const std::string& msg) -> void {
    throw ConfigError("scenario line " + std::to_string(line_no) + ": " + msg);
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) fail("expected key=value, got \"" + line + "\"");
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "name") {
      spec.name = value;
    } else if (key == "height") {
      spec.height = parse_int_field(value, key);
    } else if (key == "width") {
      spec.width = parse_int_field(value, key);
    } else if (key == "agents") {
      spec.num_agents = parse_int_field(value, key);
    } else if (key == "build_skills") {
      spec.build_skills = parse_double_list(value, key);
    } else if (key == "gather_skills") {
      spec.gather_skills = parse_double_list(value, key);
    } else if (key == "map") {
      if (!value.empty()) fail("map= must end its line");
      saw_map = true;
      break;
    } else {
      fail("unknown key \"" + key + "\"");
    }
  }

  if (spec.name.empty()) throw ConfigError("scenario: missing name");
  if (spec.height < 2 || spec.width < 2) throw ConfigError("scenario: bad dimensions");
  if (spec.num_agents < 1 || spec.num_agents > 10) {
    throw ConfigError("scenario: agents must be 1..10 (one map digit per agent)");
  }
  if (!saw_map) throw ConfigError("scenario: missing map= block");
  if (static_cast<int>(spec.build_skills.size()) != spec.num_agents) {
    throw ConfigError("scenario: build_skills count != agents");
  }
  if (static_cast<int>(spec.gather_skills.size()) != spec.num_agents) {
    throw ConfigError("scenario: gather_skills count != agents");
  }
  for (double s : spec.build_skills) {
    if (!(s >= 10.0 && s <= 30.0)) throw ConfigError("scenario: build skill outside [10,30]");
  }
  for (double s : spec.gather_skills) {
    if (!(s >= 0.0 && s <= 1.0)) throw ConfigError("scenario: gather skill outside [0,1]");
  }

  spec.terrain.assign(static_cast<std::size_t>(spec.height) * spec.width, Terrain::kEmpty);
  spec.start_row.assign(spec.num_agents, -1);
  spec.start_col.assign(spec.num_agents, -1);

  for (int r = 0; r < spec.height; ++r) {
    if (!std::getline(in, line)) throw ConfigError("scenario: map ended early");
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (static_cast<int>(line.size()) != spec.width) {
      fail("map row has length " + std::to_string(line.size()) + ", want " +
           std::to_string(spec.width));
    }
    for (int c = 0; c < spec.width; ++c) {
      const char ch = line[static_cast<std::size_t>(c)];
      Terrain t = Terrain::kEmpty;
      if (ch == 'W') {
        t = Terrain::kWater;
      } else if (ch == 'S') {
        t = Terrain::kStoneSource;
      } else if (ch == 'T') {
        t = Terrain::kWoodSource;
      } else if (ch == '.') {
        t = Terrain::kEmpty;
      } else if (ch >= '0' && ch <= '9') {
        const int a = ch - '0';
        if (a >= spec.num_agents) fail("agent digit out of range");
        if (spec.start_row[a] >= 0) fail("duplicate start for agent " + std::to_string(a));
        spec.start_row[a] = r;
        spec.start_col[a] = c;
      } else {
        fail(std::string("bad map character '") + ch + "'");
      }
      spec.terrain[static_cast<std::size_t>(r) * spec.width + c] = t;
    }
  }
  // Anything after the map block other than blank lines is a mistake.
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) fail("unexpected content after map block");
  }
  for (int a = 0; a < spec.num_agents; ++a) {
    if (spec.start_row[a] < 0) {
      throw ConfigError("scenario: missing start for agent " + std::to_string(a));
    }
  }
  return spec;
}

ScenarioSpec load_scenario(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("scenario: cannot open " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_scenario(buf.str());
}

std::string serialize_scenario(const ScenarioSpec& spec) {
  std::ostringstream out;
  out << "name=" << spec.name << "\n";
  out << "height=" << spec.height << "\n";
  out << "width=" << spec.width << "\n";
  out << "agents=" << spec.num_agents << "\n";
  auto write_list = [&out](const char* key, const std::vector<double>& v) {
    out << key << "=";
    for (std::size_t i = 0; i < v.size(); ++i) {
      char buf[40];
      std::snprintf(buf, sizeof(buf), "%s%.17g", i == 0 ? "" : ",", v[i]);
      out << buf;
    }
    out << "\n";
  };
  write_list("build_skills", spec.build_skills);
  write_list("gather_skills", spec.gather_skills);
  out << "map=\n";
  for (int r = 0; r < spec.height; ++r) {
    for (int c = 0; c < spec.width; ++c) {
      char ch = '.';
      for (int a = 0; a < spec.num_agents; ++a) {
        if (spec.start_row[a] == r && spec.start_col[a] == c) ch = static_cast<char>('0' + a);
      }
      if (ch == '.') {
        switch (spec.at(r, c)) {
          case Terrain::kEmpty: ch = '.'; break;
          case Terrain::kWater: ch = 'W'; break;
          case Terrain::kStoneSource: ch = 'S'; break;
          case Terrain::kWoodSource: ch = 'T'; break;
        }
      }
      out << ch;
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace gtb::scenario
