#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "navlab/errors.hpp"
#include "navlab/world.hpp"

namespace navlab {

using ordered_json = nlohmann::ordered_json;

inline ordered_json world_to_json(const WorldSpec& w) {
  ordered_json j;
  j["format"] = 1;
  j["room"] = {w.room_w, w.room_h};
  j["seed"] = w.seed;
  ordered_json walls = ordered_json::array();
  for (const auto& wall : w.walls) walls.push_back({wall.center.x, wall.center.y});
  j["walls"] = std::move(walls);
  ordered_json obs = ordered_json::array();
  for (const auto& o : w.obstacles) {
    ordered_json e;
    if (o.shape == Obstacle::Shape::cylinder) {
      e["shape"] = "cylinder";
      e["radius"] = o.radius;
    } else {
      e["shape"] = "box";
      e["width"] = o.width;
      e["height"] = o.height;
    }
    e["pose"] = {o.pose.x, o.pose.y, o.pose.theta};
    obs.push_back(std::move(e));
  }
  j["obstacles"] = std::move(obs);
  ordered_json field = ordered_json::array();
  for (const auto& col : w.density.grid) field.push_back(col);
  j["density_field"] = std::move(field);
  return j;
}

inline WorldSpec world_from_json(const ordered_json& j) {
  if (!j.contains("format") || j["format"].get<int>() != 1)
    throw IoError("world file: unsupported format");
  WorldSpec w;
  w.room_w = j["room"][0].get<double>();
  w.room_h = j["room"][1].get<double>();
  w.seed = j["seed"].get<uint64_t>();
  for (const auto& e : j["walls"])
    w.walls.push_back({{e[0].get<double>(), e[1].get<double>()}});
  for (const auto& e : j["obstacles"]) {
    Obstacle o;
    std::string shape = e["shape"].get<std::string>();
    if (shape == "cylinder") {
      o.shape = Obstacle::Shape::cylinder;
      o.radius = e["radius"].get<double>();
    } else if (shape == "box") {
      o.shape = Obstacle::Shape::box;
      o.width = e["width"].get<double>();
      o.height = e["height"].get<double>();
    } else {
      throw IoError("world file: unknown shape " + shape);
    }
    o.pose = {e["pose"][0].get<double>(), e["pose"][1].get<double>(),
              e["pose"][2].get<double>()};
    w.obstacles.push_back(o);
  }
  for (int ix = 0; ix < 5; ++ix)
    for (int iy = 0; iy < 5; ++iy)
      w.density.grid[ix][iy] = j["density_field"][ix][iy].get<double>();
  return w;
}

inline void save_world(const WorldSpec& w, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f << world_to_json(w).dump(2) << "\n";
}

inline WorldSpec load_world(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path);
  ordered_json j;
  try {
    f >> j;
  } catch (const std::exception& e) {
    throw IoError(std::string("world file parse error: ") + e.what());
  }
  return world_from_json(j);
}

}  // namespace navlab
