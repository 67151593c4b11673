#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "seqstrat/coreset.hpp"
#include "seqstrat/pool.hpp"
#include "seqstrat/types.hpp"

namespace seqstrat {

// All artifacts are line-delimited JSON: one header record, then one record
// per item. Field order is fixed, so identical inputs serialize to identical
// bytes. Reals use shortest round-trip formatting (lossless).
using Json = nlohmann::ordered_json;

// Writes contents to a temp file next to `path`, then renames into place.
void atomic_write_file(const std::string& path, const std::string& contents);
std::string read_text_file(const std::string& path);

// --- manifest -------------------------------------------------------------
// Header: {"intensity_bins": B, "labels": {...}[, "provenance": {...}]}
// Scan:   {"seq": s, "frame": f, "pos": [x,y,z], "counts": {...}, "hist": [...]}

struct ManifestFile {
  DatasetManifest manifest;
  std::optional<Json> provenance;
};

std::string serialize_manifest(const DatasetManifest& manifest,
                               const std::optional<Json>& provenance = std::nullopt);
void write_manifest(const std::string& path, const DatasetManifest& manifest,
                    const std::optional<Json>& provenance = std::nullopt);
ManifestFile parse_manifest(std::istream& in);
ManifestFile read_manifest(const std::string& path);

// --- segment table ----------------------------------------------------------

struct SegmentsFile {
  std::vector<Segment> segments;
  std::string granularity;
  std::uint32_t intensity_bins = 0;
  std::optional<Json> provenance;
};

std::string serialize_segments(const std::vector<Segment>& segments,
                               const std::string& granularity, std::uint32_t intensity_bins,
                               const std::optional<Json>& provenance = std::nullopt);
void write_segments(const std::string& path, const std::vector<Segment>& segments,
                    const std::string& granularity, std::uint32_t intensity_bins,
                    const std::optional<Json>& provenance = std::nullopt);
SegmentsFile parse_segments(std::istream& in);
SegmentsFile read_segments(const std::string& path);

// --- split assignment / report ---------------------------------------------

Json assignment_to_json(const SplitAssignment& assignment);
SplitAssignment assignment_from_json(const Json& record);
std::string serialize_assignment(const SplitAssignment& assignment,
                                 const std::optional<Json>& provenance = std::nullopt);
void write_assignment(const std::string& path, const SplitAssignment& assignment,
                      const std::optional<Json>& provenance = std::nullopt);
SplitAssignment read_assignment(const std::string& path);

Json report_to_json(const SplitReport& report);
std::string serialize_report(const SplitReport& report,
                             const std::optional<Json>& provenance = std::nullopt);
void write_report(const std::string& path, const SplitReport& report,
                  const std::optional<Json>& provenance = std::nullopt);

// --- ranked pool --------------------------------------------------------------

std::string serialize_pool(const RankedPool& pool,
                           const std::optional<Json>& provenance = std::nullopt);
void write_pool(const std::string& path, const RankedPool& pool,
                const std::optional<Json>& provenance = std::nullopt);

// --- coreset / AL plans ------------------------------------------------------

std::string serialize_coreset_plan(const CoresetPlan& plan, const DatasetManifest& manifest,
                                   const std::optional<Json>& provenance = std::nullopt);
void write_coreset_plan(const std::string& path, const CoresetPlan& plan,
                        const DatasetManifest& manifest,
                        const std::optional<Json>& provenance = std::nullopt);

std::string serialize_al_plan(const std::vector<std::vector<std::uint32_t>>& steps,
                              const std::optional<Json>& provenance = std::nullopt);
void write_al_plan(const std::string& path,
                   const std::vector<std::vector<std::uint32_t>>& steps,
                   const std::optional<Json>& provenance = std::nullopt);

// --- small inputs -------------------------------------------------------------

// "scan_id score" per line; '#' comments and blank lines ignored.
std::map<std::uint32_t, double> read_scores_file(const std::string& path);

// Scan ids as a comma list ("3,7,9") or @file with one id per line.
std::vector<std::uint32_t> parse_id_list_arg(const std::string& arg);

} // namespace seqstrat
