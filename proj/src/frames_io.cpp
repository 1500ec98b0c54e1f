#include "narcan/frames_io.hpp"

#include <fnmatch.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "narcan/png_io.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace narcan {

FrameSequence load_frames(const std::string& directory_path,
                          const std::string& pattern) {
  if (!fs::is_directory(directory_path))
    raise(ErrorCode::IoFailure, "not a directory: " + directory_path);

  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(directory_path)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (fnmatch(pattern.c_str(), name.c_str(), 0) == 0) names.push_back(name);
  }
  // Ordering is a pure function of the filename sort.
  std::sort(names.begin(), names.end());
  if (names.size() < 2)
    raise(ErrorCode::EmptyDirectory,
          directory_path + ": found " + std::to_string(names.size()) +
              " file(s) matching '" + pattern + "', need at least 2");

  FrameSequence seq;
  seq.frames.reserve(names.size());
  for (const std::string& name : names) {
    Image frame = decode_png_file((fs::path(directory_path) / name).string(), 3);
    if (!seq.frames.empty() && !frame.same_shape(seq.frames.front()))
      raise(ErrorCode::DimensionMismatch,
            name + ": " + std::to_string(frame.width) + "x" +
                std::to_string(frame.height) + " differs from first frame " +
                std::to_string(seq.frames.front().width) + "x" +
                std::to_string(seq.frames.front().height));
    seq.frames.push_back(std::move(frame));
  }
  return seq;
}

void save_frames(const FrameSequence& seq, const std::string& directory_path) {
  std::error_code ec;
  fs::create_directories(directory_path, ec);
  if (!fs::is_directory(directory_path))
    raise(ErrorCode::IoFailure, "cannot create directory: " + directory_path);
  char name[32];
  for (int i = 0; i < seq.frame_count(); ++i) {
    std::snprintf(name, sizeof(name), "frame_%05d.png", i);
    encode_png_file(seq.frames[i], (fs::path(directory_path) / name).string());
  }
}

std::string canonical_manifest_path(const std::string& image_path) {
  fs::path p(image_path);
  p.replace_extension("");
  return p.string() + ".canonical.json";
}

void export_canonical(const RasterCanvas& canvas, const std::string& path) {
  canvas.validate();
  if (canvas.channels() != 3 && canvas.channels() != 4)
    raise(ErrorCode::InvalidArgument,
          "export_canonical: canvas must be RGB or RGBA");
  encode_png_file(canvas.image, path);

  json manifest = {
      {"origin_u", canvas.origin_u}, {"origin_v", canvas.origin_v},
      {"scale", canvas.scale},       {"height", canvas.height()},
      {"width", canvas.width()},
  };
  std::ofstream out(canonical_manifest_path(path));
  if (!out) raise(ErrorCode::IoFailure, "cannot write sidecar for " + path);
  out << manifest.dump(2) << "\n";
}

RasterCanvas import_canonical(const std::string& path) {
  const std::string manifest_path = canonical_manifest_path(path);
  std::ifstream in(manifest_path);
  if (!in)
    raise(ErrorCode::ManifestMissing,
          path + ": no sidecar " + manifest_path +
              " and no explicit origin/scale given");
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    raise(ErrorCode::DecodeFailure, manifest_path + ": " + e.what());
  }

  RasterCanvas canvas;
  canvas.image = decode_png_file(path, 0);
  try {
    canvas.origin_u = manifest.at("origin_u").get<double>();
    canvas.origin_v = manifest.at("origin_v").get<double>();
    canvas.scale = manifest.at("scale").get<double>();
    const int h = manifest.at("height").get<int>();
    const int w = manifest.at("width").get<int>();
    if (h != canvas.height() || w != canvas.width())
      raise(ErrorCode::GeometryMismatch,
            path + ": manifest dims " + std::to_string(w) + "x" +
                std::to_string(h) + " differ from image " +
                std::to_string(canvas.width()) + "x" +
                std::to_string(canvas.height()));
  } catch (const json::exception& e) {
    raise(ErrorCode::DecodeFailure, manifest_path + ": " + e.what());
  }
  canvas.validate();
  return canvas;
}

RasterCanvas import_canonical(const std::string& path,
                              const CanvasGeometry& geometry) {
  RasterCanvas canvas;
  canvas.image = decode_png_file(path, 0);
  canvas.origin_u = geometry.origin_u;
  canvas.origin_v = geometry.origin_v;
  canvas.scale = geometry.scale;
  canvas.validate();
  return canvas;
}

}  // namespace narcan
