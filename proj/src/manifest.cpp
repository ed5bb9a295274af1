#include "splicegan/manifest.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "splicegan/errors.hpp"

namespace splicegan {

using ordered_json = nlohmann::ordered_json;

const char* to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::validation: return "validation";
    case Split::test: return "test";
  }
  return "train";
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "validation") return Split::validation;
  if (s == "test") return Split::test;
  throw ConfigError("unknown split: " + s);
}

int64_t ClassCounts::of(SizeClass c) const {
  switch (c) {
    case SizeClass::small: return small;
    case SizeClass::medium: return medium;
    case SizeClass::large: return large;
    case SizeClass::pristine: return pristine;
  }
  return 0;
}

namespace {

void bump(ClassCounts& counts, SizeClass c) {
  switch (c) {
    case SizeClass::small: ++counts.small; break;
    case SizeClass::medium: ++counts.medium; break;
    case SizeClass::large: ++counts.large; break;
    case SizeClass::pristine: ++counts.pristine; break;
  }
}

}  // namespace

ClassCounts DatasetManifest::counts() const {
  ClassCounts c;
  for (const auto& p : pairs) bump(c, p.size_class);
  return c;
}

ClassCounts DatasetManifest::counts(Split s) const {
  ClassCounts c;
  for (const auto& p : pairs)
    if (p.split == s) bump(c, p.size_class);
  return c;
}

std::vector<const PairRecord*> DatasetManifest::split_records(Split s) const {
  std::vector<const PairRecord*> out;
  for (const auto& p : pairs)
    if (p.split == s) out.push_back(&p);
  return out;
}

void save_manifest(const std::string& path, const DatasetManifest& manifest) {
  ordered_json doc;
  doc["seed"] = manifest.seed;
  doc["pairs"] = ordered_json::array();
  for (const auto& p : manifest.pairs) {
    ordered_json rec;
    rec["id"] = p.id;
    rec["image_path"] = p.image_path;
    rec["mask_path"] = p.mask_path;
    rec["size_class"] = to_string(p.size_class);
    rec["split"] = p.split ? to_string(*p.split) : "unassigned";
    doc["pairs"].push_back(std::move(rec));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write manifest: " + path);
  out << doc.dump(2) << "\n";
  if (!out) throw IoError("failed writing manifest: " + path);
}

DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifactError("cannot open manifest: " + path);
  ordered_json doc;
  try {
    in >> doc;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("invalid manifest JSON: ") + e.what());
  }
  DatasetManifest manifest;
  manifest.seed = doc.at("seed").get<uint64_t>();
  for (const auto& rec : doc.at("pairs")) {
    PairRecord p;
    p.id = rec.at("id").get<std::string>();
    p.image_path = rec.at("image_path").get<std::string>();
    p.mask_path = rec.at("mask_path").get<std::string>();
    p.size_class = size_class_from_string(rec.at("size_class").get<std::string>());
    const std::string split = rec.at("split").get<std::string>();
    if (split != "unassigned") p.split = split_from_string(split);
    manifest.pairs.push_back(std::move(p));
  }
  return manifest;
}

}  // namespace splicegan
