#include "narcan/separation.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace narcan {

void SegmentPlan::validate() const {
  if (k < 1 || static_cast<int>(segments.size()) != k)
    raise(ErrorCode::InfeasiblePlan, "plan must hold k >= 1 segments");
  if (segments.front().first != 0)
    raise(ErrorCode::InfeasiblePlan, "first segment must start at 0");
  for (int i = 0; i < k; ++i) {
    const auto [s, e] = segments[i];
    if (s >= e) raise(ErrorCode::InfeasiblePlan, "segment must be non-empty");
    const int len = e - s;
    // The overlap constraint only binds when segments actually meet.
    if (k > 1 && overlap >= len)
      raise(ErrorCode::InfeasiblePlan,
            "overlap must be shorter than every segment");
    if (i > 0 && segments[i - 1].second - s != overlap)
      raise(ErrorCode::InfeasiblePlan,
            "consecutive segments must share exactly `overlap` frames");
    // A frame may sit in at most one overlap window.
    if (i > 0 && i + 1 < k && segments[i - 1].second > segments[i + 1].first)
      raise(ErrorCode::InfeasiblePlan, "overlap windows must not intersect");
  }
}

SegmentPlan plan_segments(int total_frames, int k, int overlap) {
  if (total_frames < 1 || k < 1 || overlap < 0)
    raise(ErrorCode::InvalidArgument, "plan_segments: bad arguments");
  SegmentPlan plan;
  plan.k = k;
  plan.overlap = overlap;  // stored even when unused (k=1)
  if (k == 1) {
    plan.segments = {{0, total_frames}};
    plan.validate();
    return plan;
  }

  // Equal lengths L solving k*L - (k-1)*overlap = T, rounded up; the
  // remainder lands in the last segment.
  const long numer = static_cast<long>(total_frames) +
                     static_cast<long>(k - 1) * overlap;
  const int length = static_cast<int>((numer + k - 1) / k);
  const int stride = length - overlap;
  if (stride <= 0)
    raise(ErrorCode::InfeasiblePlan,
          "overlap " + std::to_string(overlap) +
              " leaves no forward progress for k=" + std::to_string(k));
  for (int i = 0; i < k; ++i) {
    const int start = i * stride;
    int end = start + length;
    if (i == k - 1) end = total_frames;
    if (start >= total_frames || end > total_frames + 0 || start >= end)
      raise(ErrorCode::InfeasiblePlan, "segments would leave [0,T)");
    plan.segments.emplace_back(start, end);
  }
  plan.validate();
  if (plan.total_frames() != total_frames)
    raise(ErrorCode::InfeasiblePlan, "segments do not cover [0,T)");
  return plan;
}

std::vector<std::pair<int, double>> blend_weight(const SegmentPlan& plan,
                                                 int t) {
  if (t < 0 || t >= plan.total_frames())
    raise(ErrorCode::InvalidArgument, "blend_weight: t out of range");
  // Overlap between segments i and i+1 spans [start_{i+1}, end_i).
  for (int i = 0; i + 1 < plan.k; ++i) {
    const int lo = plan.segments[i + 1].first;
    const int hi = plan.segments[i].second;
    if (t >= lo && t < hi) {
      const int window = hi - lo;
      if (window == 1) return {{i, 0.5}, {i + 1, 0.5}};
      const double a = static_cast<double>(t - lo) / (window - 1);
      return {{i, 1.0 - a}, {i + 1, a}};
    }
  }
  for (int i = 0; i < plan.k; ++i)
    if (t >= plan.segments[i].first && t < plan.segments[i].second)
      return {{i, 1.0}};
  raise(ErrorCode::InvalidArgument, "blend_weight: t not covered by plan");
}

void SegmentModelSet::validate() const {
  plan.validate();
  if (static_cast<int>(models.size()) != plan.k)
    raise(ErrorCode::InvalidArgument, "model count differs from plan");
  for (int i = 0; i < plan.k; ++i) {
    const int len = plan.segments[i].second - plan.segments[i].first;
    if (models[i].frame_count != len)
      raise(ErrorCode::InvalidArgument,
            "segment " + std::to_string(i) + " model frame count mismatch");
  }
}

Image render_blended(const SegmentModelSet& set, int t) {
  const auto weights = blend_weight(set.plan, t);
  Image out;
  for (const auto& [segment, alpha] : weights) {
    const int local = t - set.plan.segments[segment].first;
    const Image rendered = render_frame(set.models[segment], local);
    if (out.empty()) {
      out = rendered;
      if (alpha != 1.0)
        for (float& v : out.data) v = static_cast<float>(v * alpha);
    } else {
      for (size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = static_cast<float>(out.data[i] + alpha * rendered.data[i]);
    }
  }
  return out;
}

void save_model_set(const SegmentModelSet& set, const std::string& directory) {
  set.validate();
  std::error_code ec;
  fs::create_directories(directory, ec);

  json plan_json = json::array();
  for (const auto& [s, e] : set.plan.segments) plan_json.push_back({s, e});

  if (set.plan.k == 1) {
    save_model(set.models[0], directory);
    // Root manifest gains the plan keys.
    const std::string manifest_path =
        (fs::path(directory) / "manifest.json").string();
    std::ifstream in(manifest_path);
    json manifest;
    in >> manifest;
    in.close();
    manifest["k"] = 1;
    manifest["overlap"] = set.plan.overlap;
    manifest["plan"] = plan_json;
    std::ofstream out(manifest_path);
    out << manifest.dump(2) << "\n";
    return;
  }

  char sub[32];
  for (int i = 0; i < set.plan.k; ++i) {
    std::snprintf(sub, sizeof(sub), "segment_%02d", i);
    save_model(set.models[i], (fs::path(directory) / sub).string());
  }
  json manifest = {
      {"version", 1},
      {"k", set.plan.k},
      {"overlap", set.plan.overlap},
      {"plan", plan_json},
      {"T", set.plan.total_frames()},
      {"H", set.models[0].frame_height},
      {"W", set.models[0].frame_width},
  };
  std::ofstream out((fs::path(directory) / "manifest.json").string());
  if (!out) raise(ErrorCode::IoFailure, "cannot write manifest in " + directory);
  out << manifest.dump(2) << "\n";
}

SegmentModelSet load_model_set(const std::string& directory) {
  const std::string manifest_path =
      (fs::path(directory) / "manifest.json").string();
  std::ifstream in(manifest_path);
  if (!in) raise(ErrorCode::ManifestMissing, manifest_path + " not found");
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    raise(ErrorCode::DecodeFailure, manifest_path + ": " + e.what());
  }

  SegmentModelSet set;
  set.plan.k = manifest.value("k", 1);
  set.plan.overlap = manifest.value("overlap", 0);
  if (manifest.contains("plan")) {
    for (const auto& pair : manifest.at("plan"))
      set.plan.segments.emplace_back(pair.at(0).get<int>(),
                                     pair.at(1).get<int>());
  }

  if (set.plan.k == 1) {
    set.models.push_back(load_model(directory));
    if (set.plan.segments.empty())
      set.plan.segments = {{0, set.models[0].frame_count}};
  } else {
    char sub[32];
    for (int i = 0; i < set.plan.k; ++i) {
      std::snprintf(sub, sizeof(sub), "segment_%02d", i);
      set.models.push_back(load_model((fs::path(directory) / sub).string()));
    }
  }
  set.validate();
  return set;
}

// ---------------------------------------------------------------------------
// Grid trick

std::pair<RasterCanvas, GridManifest> grid_concat(
    const std::vector<RasterCanvas>& canvases) {
  const int k = static_cast<int>(canvases.size());
  if (k < 1 || k > 4)
    raise(ErrorCode::InvalidArgument, "grid_concat: need 1..4 canvases");
  const Image& first = canvases.front().image;
  for (const RasterCanvas& c : canvases)
    if (!c.image.same_shape(first))
      raise(ErrorCode::DimensionMismatch,
            "grid_concat: canvases must share dimensions");

  GridManifest manifest;
  manifest.k = k;
  manifest.cell_height = first.height;
  manifest.cell_width = first.width;
  for (const RasterCanvas& c : canvases)
    manifest.cells.push_back({c.origin_u, c.origin_v, c.scale});

  RasterCanvas grid;
  grid.origin_u = 0.0;
  grid.origin_v = 0.0;
  grid.scale = 1.0;
  grid.image = Image(2 * first.height, 2 * first.width, first.channels, 0.0f);
  for (int i = 0; i < k; ++i) {
    const int row = i / 2, col = i % 2;
    for (int y = 0; y < first.height; ++y)
      for (int x = 0; x < first.width; ++x)
        for (int c = 0; c < first.channels; ++c)
          grid.image.at(row * first.height + y, col * first.width + x, c) =
              canvases[i].image.at(y, x, c);
  }
  return {grid, manifest};
}

std::vector<RasterCanvas> grid_split(const RasterCanvas& grid,
                                     const GridManifest& manifest) {
  if (manifest.k < 1 || manifest.k > 4)
    raise(ErrorCode::InvalidArgument, "grid_split: k must be 1..4");
  if (grid.image.height != 2 * manifest.cell_height ||
      grid.image.width != 2 * manifest.cell_width)
    raise(ErrorCode::DimensionMismatch,
          "grid_split: grid does not match 2x2 of the manifest cells");
  std::vector<RasterCanvas> out;
  for (int i = 0; i < manifest.k; ++i) {
    const int row = i / 2, col = i % 2;
    RasterCanvas cell;
    cell.origin_u = manifest.cells[i].origin_u;
    cell.origin_v = manifest.cells[i].origin_v;
    cell.scale = manifest.cells[i].scale;
    cell.image = Image(manifest.cell_height, manifest.cell_width,
                       grid.image.channels);
    for (int y = 0; y < manifest.cell_height; ++y)
      for (int x = 0; x < manifest.cell_width; ++x)
        for (int c = 0; c < grid.image.channels; ++c)
          cell.image.at(y, x, c) = grid.image.at(row * manifest.cell_height + y,
                                                 col * manifest.cell_width + x,
                                                 c);
    out.push_back(std::move(cell));
  }
  return out;
}

std::vector<RasterCanvas> grid_split(const RasterCanvas& grid, int k) {
  if (grid.image.height % 2 != 0 || grid.image.width % 2 != 0)
    raise(ErrorCode::DimensionMismatch, "grid_split: odd grid dimensions");
  GridManifest manifest;
  manifest.k = k;
  manifest.cell_height = grid.image.height / 2;
  manifest.cell_width = grid.image.width / 2;
  manifest.cells.assign(static_cast<size_t>(k),
                        {grid.origin_u, grid.origin_v, grid.scale});
  return grid_split(grid, manifest);
}

void save_grid_manifest(const GridManifest& manifest, const std::string& path) {
  json cells = json::array();
  for (const auto& c : manifest.cells)
    cells.push_back({{"origin_u", c.origin_u},
                     {"origin_v", c.origin_v},
                     {"scale", c.scale}});
  json j = {
      {"k", manifest.k},
      {"cell_height", manifest.cell_height},
      {"cell_width", manifest.cell_width},
      {"cells", cells},
  };
  std::ofstream out(path);
  if (!out) raise(ErrorCode::IoFailure, "cannot write " + path);
  out << j.dump(2) << "\n";
}

GridManifest load_grid_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::ManifestMissing, path + " not found");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    raise(ErrorCode::DecodeFailure, path + ": " + e.what());
  }
  GridManifest manifest;
  manifest.k = j.at("k").get<int>();
  manifest.cell_height = j.at("cell_height").get<int>();
  manifest.cell_width = j.at("cell_width").get<int>();
  for (const auto& c : j.at("cells"))
    manifest.cells.push_back({c.at("origin_u").get<double>(),
                              c.at("origin_v").get<double>(),
                              c.at("scale").get<double>()});
  return manifest;
}

// ---------------------------------------------------------------------------
// Edit warping

RasterCanvas warp_edit(const RasterCanvas& edit, const FlowField& flow) {
  if (edit.channels() != 4)
    raise(ErrorCode::InvalidArgument, "warp_edit: edit layer must be RGBA");
  if (edit.image.height != flow.height || edit.image.width != flow.width)
    raise(ErrorCode::DimensionMismatch,
          "warp_edit: edit and flow dimensions differ");
  RasterCanvas out = edit;
  std::vector<uint8_t> sample_ok;
  out.image = warp_by_flow(edit.image, flow, &sample_ok);
  for (int y = 0; y < flow.height; ++y)
    for (int x = 0; x < flow.width; ++x)
      if (!sample_ok[flow.index(y, x)]) {
        for (int c = 0; c < 4; ++c) out.image.at(y, x, c) = 0.0f;
      }
  return out;
}

std::vector<RasterCanvas> transfer_edit_chain(
    const RasterCanvas& edit, const std::vector<RasterCanvas>& canonicals,
    FlowBackend& backend) {
  if (canonicals.empty())
    raise(ErrorCode::InvalidArgument, "transfer_edit_chain: no canonicals");
  std::vector<RasterCanvas> out;
  out.push_back(edit);
  for (size_t i = 1; i < canonicals.size(); ++i) {
    // Flow indexed on C_i's grid pulls the previous edit onto C_i.
    const FlowField flow =
        flow_between(canonicals[i - 1].image, canonicals[i].image, backend,
                     static_cast<int>(i - 1), static_cast<int>(i));
    RasterCanvas warped = warp_edit(out.back(), flow);
    warped.origin_u = canonicals[i].origin_u;
    warped.origin_v = canonicals[i].origin_v;
    warped.scale = canonicals[i].scale;
    out.push_back(std::move(warped));
  }
  return out;
}

}  // namespace narcan
