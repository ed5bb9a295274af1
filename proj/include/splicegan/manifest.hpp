#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "splicegan/image.hpp"

namespace splicegan {

enum class Split { train, validation, test };

const char* to_string(Split s);
Split split_from_string(const std::string& s);

struct PairRecord {
  std::string id;
  std::string image_path;  // relative to the manifest's directory
  std::string mask_path;
  SizeClass size_class = SizeClass::pristine;
  std::optional<Split> split;
};

struct ClassCounts {
  int64_t small = 0;
  int64_t medium = 0;
  int64_t large = 0;
  int64_t pristine = 0;

  int64_t total() const { return small + medium + large + pristine; }
  int64_t of(SizeClass c) const;
};

struct DatasetManifest {
  uint64_t seed = 0;
  std::vector<PairRecord> pairs;

  ClassCounts counts() const;
  ClassCounts counts(Split s) const;
  std::vector<const PairRecord*> split_records(Split s) const;
};

void save_manifest(const std::string& path, const DatasetManifest& manifest);
DatasetManifest load_manifest(const std::string& path);

}  // namespace splicegan
