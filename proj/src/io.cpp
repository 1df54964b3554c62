#include "spiralforge/io.hpp"

#include <fstream>

#include <json.hpp>

#include "spiralforge/hyperband.hpp"

namespace sf::io {

namespace {
using json = nlohmann::json;
}

void save_trajectory(const trajgen::Trajectory& traj, const std::string& base) {
  json manifest{{"format", "spiralforge-trajectory"},
                {"version", 1},
                {"kind", traj.kind},
                {"n_frames", traj.n_frames},
                {"n_interleaves", traj.n_interleaves},
                {"n_samples", traj.n_samples},
                {"quad_scale", traj.quad_scale},
                {"ordering", trajgen::to_string(traj.config.ordering)},
                {"config", json::parse(hyperband::config_to_json(traj.config))}};
  std::ofstream out(base + ".json");
  if (!out) throw Error(ErrorCode::IoError, "cannot write manifest: " + base);
  out << manifest.dump(2) << "\n";
  tensor_file::write_f64(base + ".coords.tnsr", traj.coords);
  tensor_file::write_f64(base + ".weights.tnsr", traj.density_weights);
}

trajgen::Trajectory load_trajectory(const std::string& base) {
  std::ifstream in(base + ".json");
  if (!in) throw Error(ErrorCode::IoError, "cannot read manifest: " + base);
  json manifest = json::parse(in);
  if (manifest.value("format", "") != "spiralforge-trajectory")
    throw Error(ErrorCode::FormatError, "not a trajectory manifest: " + base);

  trajgen::Trajectory traj;
  traj.kind = manifest.at("kind");
  traj.n_frames = manifest.at("n_frames");
  traj.n_interleaves = manifest.at("n_interleaves");
  traj.n_samples = manifest.at("n_samples");
  traj.quad_scale = manifest.at("quad_scale");
  traj.config = hyperband::config_from_json(manifest.at("config").dump());
  traj.coords = tensor_file::read_real(base + ".coords.tnsr");
  traj.density_weights = tensor_file::read_real(base + ".weights.tnsr");
  if (traj.coords.shape != std::vector<std::int64_t>{traj.n_frames, traj.n_interleaves,
                                                     traj.n_samples, 2})
    throw Error(ErrorCode::FormatError, "coords shape mismatch in " + base);
  return traj;
}

void save_scatter_pgm(const trajgen::Trajectory& traj, const std::string& path,
                      int size) {
  std::vector<unsigned char> img(static_cast<std::size_t>(size) * size, 0);
  for (int j = 0; j < traj.n_interleaves; ++j)
    for (int s = 0; s < traj.n_samples; ++s) {
      int px = static_cast<int>((traj.coords(0, j, s, 0) + 0.5) * (size - 1));
      int py = static_cast<int>((0.5 - traj.coords(0, j, s, 1)) * (size - 1));
      if (px >= 0 && px < size && py >= 0 && py < size)
        img[static_cast<std::size_t>(py) * size + px] = 255;
    }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write image: " + path);
  out << "P5\n" << size << " " << size << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data()),
            static_cast<std::streamsize>(img.size()));
}

}  // namespace sf::io
