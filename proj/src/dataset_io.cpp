// Copyright 2026 The IMIL Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "imil/dataset_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include <json.hpp>
#include <openssl/evp.h>
#include <png.h>

#include "imil/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace imil {

namespace {

constexpr const char* kManifestFormat = "imil-dataset/v1";
constexpr const char* kLabelsFormat = "imil-hidden-labels/v1";
constexpr const char* kGenMetaFormat = "imil-genmeta/v1";

json payload_to_json(const PayloadShape& s) {
  if (s.kind == PayloadKind::kVector)
    return json{{"kind", "vector"}, {"dim", s.dim}};
  return json{{"kind", "image"},
              {"height", s.height},
              {"width", s.width},
              {"channels", s.channels}};
}

PayloadShape payload_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "vector") return PayloadShape::vector(j.at("dim").get<int>());
  if (kind == "image")
    return PayloadShape::image(j.at("height").get<int>(),
                               j.at("width").get<int>(),
                               j.at("channels").get<int>());
  throw DataError("manifest: unknown payload kind '" + kind + "'");
}

struct PngCloser {
  std::FILE* fp = nullptr;
  ~PngCloser() {
    if (fp) std::fclose(fp);
  }
};

void write_png(const std::string& path, const VecX& payload, int h, int w,
               int c) {
  if (c != 1 && c != 3)
    throw DataError("png storage supports 1 or 3 channels, got " +
                    std::to_string(c));
  PngCloser file{std::fopen(path.c_str(), "wb")};
  if (!file.fp) throw DataError("cannot write " + path);

  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw DataError("libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw DataError("libpng write failed: " + path);
  }
  png_init_io(png, file.fp);
  png_set_IHDR(png, info, w, h, 8,
               c == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  // planar CHW doubles in [0,1] -> interleaved 8-bit rows
  std::vector<png_byte> row(static_cast<std::size_t>(w) * c);
  const std::ptrdiff_t plane = static_cast<std::ptrdiff_t>(h) * w;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x)
      for (int ch = 0; ch < c; ++ch) {
        const double v = payload(ch * plane + static_cast<std::ptrdiff_t>(y) * w + x);
        row[static_cast<std::size_t>(x) * c + ch] = static_cast<png_byte>(
            std::clamp(std::lround(v * 255.0), 0L, 255L));
      }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

VecX read_png(const std::string& path, const PayloadShape& shape) {
  PngCloser file{std::fopen(path.c_str(), "rb")};
  if (!file.fp) throw DataError("cannot read " + path);

  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError("libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError("libpng read failed: " + path);
  }
  png_init_io(png, file.fp);
  png_read_info(png, info);

  const int w = png_get_image_width(png, info);
  const int h = png_get_image_height(png, info);
  // normalize to 8-bit gray or rgb
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_palette_to_rgb(png);
  png_set_expand_gray_1_2_4_to_8(png);
  png_read_update_info(png, info);
  const int c = png_get_channels(png, info);

  if (h != shape.height || w != shape.width || c != shape.channels) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError("png shape mismatch for " + path);
  }

  std::vector<png_byte> row(static_cast<std::size_t>(w) * c);
  VecX payload(shape.flat_size());
  const std::ptrdiff_t plane = static_cast<std::ptrdiff_t>(h) * w;
  for (int y = 0; y < h; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (int x = 0; x < w; ++x)
      for (int ch = 0; ch < c; ++ch)
        payload(ch * plane + static_cast<std::ptrdiff_t>(y) * w + x) =
            row[static_cast<std::size_t>(x) * c + ch] / 255.0;
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return payload;
}

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new()) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1)
      throw std::runtime_error("sha256 init failed");
  }
  ~Sha256() { EVP_MD_CTX_free(ctx_); }
  void update(const void* data, std::size_t len) {
    if (EVP_DigestUpdate(ctx_, data, len) != 1)
      throw std::runtime_error("sha256 update failed");
  }
  void update_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path);
    char buf[1 << 16];
    while (in) {
      in.read(buf, sizeof(buf));
      update(buf, static_cast<std::size_t>(in.gcount()));
    }
  }
  std::string hex() {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx_, digest, &len) != 1)
      throw std::runtime_error("sha256 final failed");
    static const char* kHex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
      out.push_back(kHex[digest[i] >> 4]);
      out.push_back(kHex[digest[i] & 0xf]);
    }
    return out;
  }

 private:
  EVP_MD_CTX* ctx_;
};

json manifest_json(const Dataset& ds, InstanceStorage storage) {
  json bags = json::array();
  for (const Bag& bag : ds.bags) {
    bags.push_back(json{
        {"id", bag.id},
        {"label", std::vector<int>(bag.label.data(),
                                   bag.label.data() + bag.label.size())},
        {"instances", bag.instance_ids}});
  }
  return json{{"format", kManifestFormat},
              {"num_classes", ds.num_classes},
              {"payload", payload_to_json(ds.shape)},
              {"instance_storage",
               storage == InstanceStorage::kInline ? "inline" : "png"},
              {"bags", bags}};
}

}  // namespace

void save_dataset(const Dataset& ds, const std::string& dir,
                  const HiddenLabels* hidden,
                  std::optional<InstanceStorage> storage) {
  const InstanceStorage st = storage.value_or(
      ds.shape.kind == PayloadKind::kImage ? InstanceStorage::kPng
                                           : InstanceStorage::kInline);
  if (st == InstanceStorage::kPng && ds.shape.kind != PayloadKind::kImage)
    throw DataError("png storage requires image payloads");

  fs::create_directories(dir);
  {
    std::ofstream out(fs::path(dir) / "manifest.json");
    if (!out) throw DataError("cannot write manifest in " + dir);
    out << manifest_json(ds, st).dump(2) << '\n';
  }

  if (st == InstanceStorage::kInline) {
    std::ofstream out(fs::path(dir) / "instances.jsonl");
    if (!out) throw DataError("cannot write instances.jsonl in " + dir);
    for (int i = 0; i < ds.instance_count(); ++i) {
      const VecX row = ds.payloads.row(i).transpose();
      json rec{{"id", i},
               {"features",
                std::vector<double>(row.data(), row.data() + row.size())}};
      out << rec.dump() << '\n';
    }
  } else {
    const fs::path img_dir = fs::path(dir) / "instances";
    fs::create_directories(img_dir);
    for (int i = 0; i < ds.instance_count(); ++i)
      write_png((img_dir / (std::to_string(i) + ".png")).string(),
                ds.payloads.row(i).transpose(), ds.shape.height,
                ds.shape.width, ds.shape.channels);
  }

  if (hidden != nullptr) {
    json labels = json::object();
    for (int i = 0; i < hidden->labels.rows(); ++i) {
      const VecXi row = hidden->labels.row(i).transpose();
      labels[std::to_string(i)] =
          std::vector<int>(row.data(), row.data() + row.size());
    }
    json j{{"format", kLabelsFormat},
           {"num_classes", static_cast<int>(hidden->labels.cols())},
           {"labels", labels}};
    std::ofstream out(fs::path(dir) / "labels.json");
    if (!out) throw DataError("cannot write labels.json in " + dir);
    out << j.dump(2) << '\n';
  }
}

Dataset load_dataset(const std::string& dir) {
  const fs::path manifest_path = fs::path(dir) / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw DataError("cannot read " + manifest_path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("manifest parse error: " + std::string(e.what()));
  }
  try {
    if (j.at("format").get<std::string>() != kManifestFormat)
      throw DataError("manifest: unsupported format");

    Dataset ds;
    ds.num_classes = j.at("num_classes").get<int>();
    ds.shape = payload_from_json(j.at("payload"));
    const std::string storage = j.at("instance_storage").get<std::string>();

    int total = 0;
    for (const json& bj : j.at("bags"))
      total += static_cast<int>(bj.at("instances").size());
    ds.payloads.resize(total, ds.shape.flat_size());

    for (const json& bj : j.at("bags")) {
      Bag bag;
      bag.id = bj.at("id").get<int>();
      const auto label = bj.at("label").get<std::vector<int>>();
      bag.label = Eigen::Map<const VecXi>(label.data(), label.size());
      bag.instance_ids = bj.at("instances").get<std::vector<int>>();
      for (int id : bag.instance_ids)
        if (id < 0 || id >= total)
          throw DataError("manifest: instance id " + std::to_string(id) +
                          " outside dense range 0.." + std::to_string(total - 1));
      ds.bags.push_back(std::move(bag));
    }

    if (storage == "inline") {
      std::ifstream lines(fs::path(dir) / "instances.jsonl");
      if (!lines) throw DataError("cannot read instances.jsonl in " + dir);
      std::string line;
      std::vector<bool> seen(total, false);
      while (std::getline(lines, line)) {
        if (line.empty()) continue;
        const json rec = json::parse(line);
        const int id = rec.at("id").get<int>();
        if (id < 0 || id >= total)
          throw DataError("instances.jsonl: id out of range");
        const auto feats = rec.at("features").get<std::vector<double>>();
        if (static_cast<int>(feats.size()) != ds.shape.flat_size())
          throw DataError("instances.jsonl: feature dim mismatch at id " +
                          std::to_string(id));
        ds.payloads.row(id) =
            Eigen::Map<const VecX>(feats.data(), feats.size()).transpose();
        seen[id] = true;
      }
      for (int i = 0; i < total; ++i)
        if (!seen[i])
          throw DataError("instances.jsonl: missing instance " +
                          std::to_string(i));
    } else if (storage == "png") {
      if (ds.shape.kind != PayloadKind::kImage)
        throw DataError("manifest: png storage requires image payloads");
      const fs::path img_dir = fs::path(dir) / "instances";
      for (int i = 0; i < total; ++i)
        ds.payloads.row(i) =
            read_png((img_dir / (std::to_string(i) + ".png")).string(),
                     ds.shape)
                .transpose();
    } else {
      throw DataError("manifest: unknown instance_storage '" + storage + "'");
    }
    return ds;
  } catch (const json::exception& e) {
    throw DataError("manifest field error: " + std::string(e.what()));
  }
}

std::optional<HiddenLabels> load_hidden_labels(const std::string& dir,
                                               int instance_count,
                                               int num_classes) {
  const fs::path path = fs::path(dir) / "labels.json";
  if (!fs::exists(path)) return std::nullopt;
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  json j;
  try {
    in >> j;
    if (j.at("format").get<std::string>() != kLabelsFormat)
      throw DataError("labels.json: unsupported format");
    if (j.at("num_classes").get<int>() != num_classes)
      throw DataError("labels.json: num_classes mismatch");
    HiddenLabels hidden;
    hidden.labels = MatXi::Zero(instance_count, num_classes);
    for (const auto& [key, value] : j.at("labels").items()) {
      const int id = std::stoi(key);
      if (id < 0 || id >= instance_count)
        throw DataError("labels.json: id out of range: " + key);
      const auto row = value.get<std::vector<int>>();
      if (static_cast<int>(row.size()) != num_classes)
        throw DataError("labels.json: label length mismatch at id " + key);
      for (int c = 0; c < num_classes; ++c) hidden.labels(id, c) = row[c];
    }
    return hidden;
  } catch (const json::exception& e) {
    throw DataError("labels.json field error: " + std::string(e.what()));
  }
}

void save_generation_metadata(const SynthParams& params,
                              const VecX& bag_confounder_norms,
                              const std::string& dir) {
  json p{{"num_pos_bags", params.num_pos_bags},
         {"num_neg_bags", params.num_neg_bags},
         {"bag_size_min", params.bag_size_min},
         {"bag_size_max", params.bag_size_max},
         {"positive_rate", params.positive_rate},
         {"confounder_strength", params.confounder_strength},
         {"signal_strength", params.signal_strength},
         {"noise_sigma", params.noise_sigma},
         {"payload", payload_to_json(params.payload)},
         {"seed", params.seed}};
  json j{{"format", kGenMetaFormat},
         {"params", p},
         {"bag_confounder_norms",
          std::vector<double>(bag_confounder_norms.data(),
                              bag_confounder_norms.data() +
                                  bag_confounder_norms.size())}};
  fs::create_directories(dir);
  std::ofstream out(fs::path(dir) / "gen_meta.json");
  if (!out) throw DataError("cannot write gen_meta.json in " + dir);
  out << j.dump(2) << '\n';
}

std::string dataset_content_hash(const std::string& dir) {
  Sha256 h;
  h.update_file((fs::path(dir) / "manifest.json").string());

  std::ifstream in(fs::path(dir) / "manifest.json");
  json j;
  in >> j;
  const std::string storage = j.at("instance_storage").get<std::string>();
  if (storage == "inline") {
    h.update_file((fs::path(dir) / "instances.jsonl").string());
  } else {
    int total = 0;
    for (const json& bj : j.at("bags"))
      total += static_cast<int>(bj.at("instances").size());
    for (int i = 0; i < total; ++i)
      h.update_file(
          (fs::path(dir) / "instances" / (std::to_string(i) + ".png")).string());
  }
  return h.hex();
}

std::string dataset_content_hash(const Dataset& ds) {
  Sha256 h;
  const std::string manifest =
      manifest_json(ds, ds.shape.kind == PayloadKind::kImage
                            ? InstanceStorage::kPng
                            : InstanceStorage::kInline)
          .dump();
  h.update(manifest.data(), manifest.size());
  VecX row;
  for (int i = 0; i < ds.instance_count(); ++i) {
    row = ds.payloads.row(i).transpose();
    h.update(row.data(), sizeof(double) * static_cast<std::size_t>(row.size()));
  }
  return h.hex();
}

}  // namespace imil
