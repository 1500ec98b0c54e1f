#include "narcan/http_prior.hpp"

#include "httplib.h"
#include "json.hpp"
#include "narcan/base64.hpp"
#include "narcan/png_io.hpp"

using nlohmann::json;

namespace narcan {

namespace {

// Accepts "host", "host:port", or "http://host:port".
void parse_url(const std::string& url, std::string& host, int& port) {
  std::string rest = url;
  const std::string scheme = "http://";
  if (rest.rfind(scheme, 0) == 0) rest = rest.substr(scheme.size());
  while (!rest.empty() && rest.back() == '/') rest.pop_back();
  const auto colon = rest.rfind(':');
  if (colon == std::string::npos) {
    host = rest;
    port = 80;
  } else {
    host = rest.substr(0, colon);
    port = std::stoi(rest.substr(colon + 1));
  }
}

json post_json(const std::string& host, int port, const std::string& path,
               const json& body) {
  httplib::Client client(host, port);
  client.set_connection_timeout(5, 0);
  client.set_read_timeout(600, 0);
  auto res = client.Post(path.c_str(), body.dump(), "application/json");
  if (!res)
    raise(ErrorCode::BackendUnavailable,
          "prior backend unreachable at " + host + ":" + std::to_string(port) +
              path + " (check NARCAN_PRIOR_URL and retry)");
  if (res->status != 200)
    raise(ErrorCode::BackendUnavailable,
          "prior backend returned HTTP " + std::to_string(res->status) +
              " for " + path + " (retry or inspect the backend log)");
  try {
    return json::parse(res->body);
  } catch (const json::exception& e) {
    raise(ErrorCode::BackendUnavailable,
          std::string("prior backend sent malformed JSON: ") + e.what());
  }
}

}  // namespace

HttpPrior::HttpPrior(std::string base_url, int native_resolution,
                     bool backend_deterministic)
    : native_resolution_(native_resolution),
      deterministic_(backend_deterministic) {
  parse_url(base_url, host_, port_);
}

RasterCanvas HttpPrior::generate_impl(const RasterCanvas& canvas,
                                      double noise_strength,
                                      const std::string& prompt,
                                      uint64_t seed) {
  const Image native =
      resize_bilinear(canvas.image, native_resolution_, native_resolution_);
  json body = {
      {"image", base64_encode(encode_png_bytes(native))},
      {"strength", noise_strength},
      {"prompt", prompt},
      {"seed", seed},
      {"adapter_id", adapter_id_},
  };
  const json reply = post_json(host_, port_, "/img2img", body);
  if (!reply.contains("image"))
    raise(ErrorCode::BackendUnavailable,
          "prior backend reply lacks 'image' field");
  Image out = decode_png_bytes(
      base64_decode(reply.at("image").get<std::string>()), 3);

  RasterCanvas result = canvas;
  result.image = resize_bilinear(out, canvas.height(), canvas.width());
  return result;
}

std::string HttpPrior::finetune_impl(const FinetuneSpec& spec) {
  json frames = json::array();
  for (const Image& frame : spec.frames->frames)
    frames.push_back(base64_encode(encode_png_bytes(frame)));
  json body = {
      {"frames", frames},
      {"token", spec.special_token},
      {"steps", spec.steps},
      {"rank", spec.rank},
  };
  for (const auto& [key, value] : spec.backend_config) body[key] = value;
  const json reply = post_json(host_, port_, "/finetune", body);
  if (!reply.contains("adapter_id"))
    raise(ErrorCode::BackendUnavailable,
          "prior backend reply lacks 'adapter_id' field");
  return reply.at("adapter_id").get<std::string>();
}

}  // namespace narcan
