#include "seqstrat/io.hpp"

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "seqstrat/error.hpp"

namespace fs = std::filesystem;

namespace seqstrat {

namespace {

Json parse_line(const std::string& line, std::size_t line_no) {
  try {
    return Json::parse(line);
  } catch (const Json::exception& e) {
    fail("line ", line_no, ": invalid JSON record: ", e.what());
  }
}

const Json& field(const Json& record, const char* name, std::size_t line_no) {
  const auto it = record.find(name);
  if (it == record.end()) fail("line ", line_no, ": missing field '", name, "'");
  return *it;
}

template <typename T>
T field_as(const Json& record, const char* name, std::size_t line_no) {
  try {
    return field(record, name, line_no).get<T>();
  } catch (const Json::exception&) {
    fail("line ", line_no, ": field '", name, "' has the wrong type");
  }
}

LabelId parse_label_key(const std::string& key, std::size_t line_no, const char* name) {
  try {
    std::size_t used = 0;
    const unsigned long value = std::stoul(key, &used);
    if (used != key.size()) throw std::invalid_argument(key);
    return static_cast<LabelId>(value);
  } catch (...) {
    fail("line ", line_no, ": field '", name, "' has non-numeric label key '", key, "'");
  }
}

Json counts_to_json(const std::map<LabelId, Count>& counts) {
  Json object = Json::object();
  for (const auto& [label, count] : counts)
    object[std::to_string(label)] = count;
  return object;
}

std::map<LabelId, Count> counts_from_json(const Json& object, std::size_t line_no,
                                          const char* name) {
  std::map<LabelId, Count> counts;
  for (const auto& [key, value] : object.items()) {
    if (!value.is_number_unsigned() && !value.is_number_integer())
      fail("line ", line_no, ": field '", name, "' has a non-integer count");
    counts[parse_label_key(key, line_no, name)] = value.get<Count>();
  }
  return counts;
}

std::vector<std::string> read_lines(std::istream& in) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

void append_provenance(Json& header, const std::optional<Json>& provenance) {
  if (provenance) header["provenance"] = *provenance;
}

std::optional<Json> take_provenance(const Json& header) {
  const auto it = header.find("provenance");
  if (it == header.end()) return std::nullopt;
  return *it;
}

} // namespace

void atomic_write_file(const std::string& path, const std::string& contents) {
  const fs::path target(path);
  if (target.has_parent_path() && !target.parent_path().empty())
    fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail("cannot write ", tmp.string());
    out << contents;
    out.flush();
    if (!out) fail("write failed for ", tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    fail("cannot rename ", tmp.string(), " to ", path, ": ", ec.message());
  }
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open ", path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

// --- manifest ------------------------------------------------------------------

std::string serialize_manifest(const DatasetManifest& manifest,
                               const std::optional<Json>& provenance) {
  manifest.validate();
  std::string out;

  Json header = Json::object();
  header["intensity_bins"] = manifest.intensity_bins;
  Json labels = Json::object();
  for (const auto& [id, name] : manifest.label_dictionary)
    labels[std::to_string(id)] = name;
  header["labels"] = std::move(labels);
  append_provenance(header, provenance);
  out += header.dump();
  out += '\n';

  for (const ScanMeta& scan : manifest.scans) {
    Json record = Json::object();
    record["seq"] = scan.sequence_id;
    record["frame"] = scan.frame_index;
    record["pos"] = Json::array({scan.position.x, scan.position.y, scan.position.z});
    record["counts"] = counts_to_json(scan.label_counts);
    record["hist"] = scan.intensity_histogram;
    out += record.dump();
    out += '\n';
  }
  return out;
}

void write_manifest(const std::string& path, const DatasetManifest& manifest,
                    const std::optional<Json>& provenance) {
  atomic_write_file(path, serialize_manifest(manifest, provenance));
}

ManifestFile parse_manifest(std::istream& in) {
  const std::vector<std::string> lines = read_lines(in);
  require(!lines.empty(), "manifest is empty");

  ManifestFile result;
  const Json header = parse_line(lines[0], 1);
  if (!header.contains("intensity_bins"))
    fail("line 1: missing field 'intensity_bins' in manifest header");
  result.manifest.intensity_bins = field_as<std::uint32_t>(header, "intensity_bins", 1);
  require(result.manifest.intensity_bins > 0, "line 1: intensity_bins must be positive");
  for (const auto& [key, value] : field(header, "labels", 1).items()) {
    if (!value.is_string()) fail("line 1: field 'labels' has a non-string name");
    result.manifest.label_dictionary[parse_label_key(key, 1, "labels")] =
        value.get<std::string>();
  }
  result.provenance = take_provenance(header);

  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::size_t line_no = i + 1;
    const Json record = parse_line(lines[i], line_no);
    ScanMeta scan;
    scan.sequence_id = field_as<std::string>(record, "seq", line_no);
    scan.frame_index = field_as<std::uint32_t>(record, "frame", line_no);
    const Json& pos = field(record, "pos", line_no);
    if (!pos.is_array() || pos.size() != 3)
      fail("line ", line_no, ": field 'pos' must be a 3-element array");
    scan.position = {pos[0].get<double>(), pos[1].get<double>(), pos[2].get<double>()};
    scan.label_counts = counts_from_json(field(record, "counts", line_no), line_no, "counts");
    scan.intensity_histogram =
        field_as<std::vector<Count>>(record, "hist", line_no);
    for (const auto& [label, count] : scan.label_counts) scan.point_count += count;
    result.manifest.scans.push_back(std::move(scan));
  }

  try {
    result.manifest.validate();
  } catch (const error& e) {
    fail("manifest invalid: ", e.what());
  }
  return result;
}

ManifestFile read_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open ", path);
  try {
    return parse_manifest(in);
  } catch (const error& e) {
    fail(path, ": ", e.what());
  }
}

// --- segment table ----------------------------------------------------------------

std::string serialize_segments(const std::vector<Segment>& segments,
                               const std::string& granularity, std::uint32_t intensity_bins,
                               const std::optional<Json>& provenance) {
  std::string out;
  Json header = Json::object();
  header["type"] = "segments";
  header["granularity"] = granularity;
  header["intensity_bins"] = intensity_bins;
  append_provenance(header, provenance);
  out += header.dump();
  out += '\n';

  for (const Segment& segment : segments) {
    Json record = Json::object();
    record["id"] = segment.segment_id;
    record["seq"] = segment.sequence_id;
    record["span"] = Json::array({segment.first_frame, segment.last_frame});
    record["frames"] = segment.frames;
    record["counts"] = counts_to_json(segment.label_counts);
    record["points"] = segment.point_count;
    record["hist"] = segment.intensity_histogram;
    out += record.dump();
    out += '\n';
  }
  return out;
}

void write_segments(const std::string& path, const std::vector<Segment>& segments,
                    const std::string& granularity, std::uint32_t intensity_bins,
                    const std::optional<Json>& provenance) {
  atomic_write_file(path, serialize_segments(segments, granularity, intensity_bins, provenance));
}

SegmentsFile parse_segments(std::istream& in) {
  const std::vector<std::string> lines = read_lines(in);
  require(!lines.empty(), "segment table is empty");

  SegmentsFile result;
  const Json header = parse_line(lines[0], 1);
  if (field_as<std::string>(header, "type", 1) != "segments")
    fail("line 1: not a segment table");
  result.granularity = field_as<std::string>(header, "granularity", 1);
  result.intensity_bins = field_as<std::uint32_t>(header, "intensity_bins", 1);
  result.provenance = take_provenance(header);

  std::set<std::uint32_t> seen_ids;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::size_t line_no = i + 1;
    const Json record = parse_line(lines[i], line_no);
    Segment segment;
    segment.segment_id = field_as<std::uint32_t>(record, "id", line_no);
    if (!seen_ids.insert(segment.segment_id).second)
      fail("line ", line_no, ": duplicate segment id ", segment.segment_id);
    segment.sequence_id = field_as<std::string>(record, "seq", line_no);
    const Json& span = field(record, "span", line_no);
    if (!span.is_array() || span.size() != 2)
      fail("line ", line_no, ": field 'span' must be a 2-element array");
    segment.first_frame = span[0].get<std::uint32_t>();
    segment.last_frame = span[1].get<std::uint32_t>();
    segment.frames = field_as<std::vector<std::uint32_t>>(record, "frames", line_no);
    segment.label_counts = counts_from_json(field(record, "counts", line_no), line_no, "counts");
    segment.point_count = field_as<Count>(record, "points", line_no);
    segment.intensity_histogram = field_as<std::vector<Count>>(record, "hist", line_no);

    Count total = 0;
    for (const auto& [label, count] : segment.label_counts) total += count;
    if (total != segment.point_count)
      fail("line ", line_no, ": field 'points' is ", segment.point_count,
           " but counts sum to ", total);
    if (segment.intensity_histogram.size() != result.intensity_bins)
      fail("line ", line_no, ": field 'hist' has ", segment.intensity_histogram.size(),
           " bins, expected ", result.intensity_bins);
    result.segments.push_back(std::move(segment));
  }
  return result;
}

SegmentsFile read_segments(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open ", path);
  try {
    return parse_segments(in);
  } catch (const error& e) {
    fail(path, ": ", e.what());
  }
}

// --- split assignment / report ------------------------------------------------------

Json assignment_to_json(const SplitAssignment& assignment) {
  Json record = Json::object();
  record["method"] = assignment.method;
  record["seed"] = assignment.seed;
  record["granularity"] = assignment.granularity;
  record["tie_break"] = assignment.tie_break;
  record["rng"] = assignment.rng;
  record["ratios"] = assignment.spec.ratios;
  record["names"] = assignment.spec.names;
  record["subsets"] = assignment.subsets;
  return record;
}

SplitAssignment assignment_from_json(const Json& record) {
  SplitAssignment assignment;
  assignment.method = field_as<std::string>(record, "method", 2);
  assignment.seed = field_as<std::uint64_t>(record, "seed", 2);
  assignment.granularity = field_as<std::string>(record, "granularity", 2);
  assignment.tie_break = field_as<std::string>(record, "tie_break", 2);
  assignment.rng = field_as<std::string>(record, "rng", 2);
  assignment.spec.ratios = field_as<std::vector<double>>(record, "ratios", 2);
  assignment.spec.names = field_as<std::vector<std::string>>(record, "names", 2);
  assignment.subsets =
      field_as<std::vector<std::vector<std::uint32_t>>>(record, "subsets", 2);
  require(assignment.subsets.size() == assignment.spec.ratios.size(),
          "split record has ", assignment.subsets.size(), " subsets but ",
          assignment.spec.ratios.size(), " ratios");
  return assignment;
}

std::string serialize_assignment(const SplitAssignment& assignment,
                                 const std::optional<Json>& provenance) {
  Json header = Json::object();
  header["type"] = "split";
  append_provenance(header, provenance);
  return header.dump() + "\n" + assignment_to_json(assignment).dump() + "\n";
}

void write_assignment(const std::string& path, const SplitAssignment& assignment,
                      const std::optional<Json>& provenance) {
  atomic_write_file(path, serialize_assignment(assignment, provenance));
}

SplitAssignment read_assignment(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open ", path);
  const std::vector<std::string> lines = read_lines(in);
  try {
    require(lines.size() >= 2, "split file needs a header and a record");
    const Json header = parse_line(lines[0], 1);
    if (field_as<std::string>(header, "type", 1) != "split")
      fail("line 1: not a split record");
    return assignment_from_json(parse_line(lines[1], 2));
  } catch (const error& e) {
    fail(path, ": ", e.what());
  }
}

Json report_to_json(const SplitReport& report) {
  Json record = Json::object();
  record["ld"] = report.ld;
  record["ifwld"] = report.ifwld;
  record["ed"] = report.ed;
  record["kl"] = report.kl;
  record["ids"] = report.ids;
  record["obtained_ratios"] = report.obtained_ratios;
  record["method"] = report.method;
  record["seed"] = report.seed;
  record["granularity"] = report.granularity;
  return record;
}

std::string serialize_report(const SplitReport& report,
                             const std::optional<Json>& provenance) {
  Json header = Json::object();
  header["type"] = "report";
  append_provenance(header, provenance);
  return header.dump() + "\n" + report_to_json(report).dump() + "\n";
}

void write_report(const std::string& path, const SplitReport& report,
                  const std::optional<Json>& provenance) {
  atomic_write_file(path, serialize_report(report, provenance));
}

// --- ranked pool --------------------------------------------------------------------

std::string serialize_pool(const RankedPool& pool, const std::optional<Json>& provenance) {
  Json header = Json::object();
  header["type"] = "ranked_pool";
  Json config = Json::object();
  config["methods"] = pool.config.methods;
  config["seeds_per_method"] = pool.config.seeds_per_method;
  config["seed_base"] = pool.config.seed_base;
  config["ratios"] = pool.config.spec.ratios;
  config["names"] = pool.config.spec.names;
  config["granularity"] = pool.config.granularity;
  config["weights"] = pool.config.weights;
  config["tie_break"] = to_string(pool.config.tie_break);
  config["mass_mode"] = to_string(pool.config.evaluate.mass_mode);
  header["config"] = std::move(config);
  header["degenerate"] = pool.degenerate;
  append_provenance(header, provenance);

  std::string out = header.dump() + "\n";
  for (std::size_t rank = 0; rank < pool.entries.size(); ++rank) {
    const RankedEntry& entry = pool.entries[rank];
    Json record = Json::object();
    record["rank"] = rank;
    record["objective"] = entry.objective;
    record["assignment"] = assignment_to_json(entry.assignment);
    record["report"] = report_to_json(entry.report);
    out += record.dump();
    out += '\n';
  }
  return out;
}

void write_pool(const std::string& path, const RankedPool& pool,
                const std::optional<Json>& provenance) {
  atomic_write_file(path, serialize_pool(pool, provenance));
}

// --- coreset / AL plans ----------------------------------------------------------------

std::string serialize_coreset_plan(const CoresetPlan& plan, const DatasetManifest& manifest,
                                   const std::optional<Json>& provenance) {
  Json header = Json::object();
  header["type"] = "coreset_plan";
  header["alpha"] = plan.alpha;
  header["seed"] = plan.seed;
  header["rng"] = plan.rng;
  append_provenance(header, provenance);

  std::string out = header.dump() + "\n";
  for (const CoresetPick& pick : plan.picks) {
    require(pick.scan_id < manifest.scans.size(), "pick id ", pick.scan_id,
            " out of manifest range");
    const ScanMeta& scan = manifest.scans[pick.scan_id];
    Json record = Json::object();
    record["id"] = pick.scan_id;
    record["seq"] = scan.sequence_id;
    record["frame"] = scan.frame_index;
    record["threshold"] = pick.threshold;
    record["rule"] = to_string(pick.rule);
    out += record.dump();
    out += '\n';
  }
  return out;
}

void write_coreset_plan(const std::string& path, const CoresetPlan& plan,
                        const DatasetManifest& manifest,
                        const std::optional<Json>& provenance) {
  atomic_write_file(path, serialize_coreset_plan(plan, manifest, provenance));
}

std::string serialize_al_plan(const std::vector<std::vector<std::uint32_t>>& steps,
                              const std::optional<Json>& provenance) {
  Json header = Json::object();
  header["type"] = "al_plan";
  header["steps"] = steps.size();
  append_provenance(header, provenance);
  std::string out = header.dump() + "\n";
  for (std::size_t i = 0; i < steps.size(); ++i) {
    Json record = Json::object();
    record["step"] = i;
    record["queries"] = steps[i];
    out += record.dump();
    out += '\n';
  }
  return out;
}

void write_al_plan(const std::string& path,
                   const std::vector<std::vector<std::uint32_t>>& steps,
                   const std::optional<Json>& provenance) {
  atomic_write_file(path, serialize_al_plan(steps, provenance));
}

// --- small inputs ------------------------------------------------------------------------

std::map<std::uint32_t, double> read_scores_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open scores file ", path);
  std::map<std::uint32_t, double> scores;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto start = line.find_first_not_of(" \t\r");
    if (start == std::string::npos || line[start] == '#') continue;
    std::istringstream fields(line);
    std::uint32_t id = 0;
    double score = 0.0;
    std::string rest;
    if (!(fields >> id >> score) || (fields >> rest))
      fail(path, " line ", line_no, ": expected '<scan_id> <score>'");
    scores[id] = score;
  }
  return scores;
}

std::vector<std::uint32_t> parse_id_list_arg(const std::string& arg) {
  std::vector<std::uint32_t> ids;
  if (!arg.empty() && arg.front() == '@') {
    std::ifstream in(arg.substr(1));
    if (!in) fail("cannot open id file ", arg.substr(1));
    std::uint32_t id = 0;
    while (in >> id) ids.push_back(id);
    return ids;
  }
  std::istringstream stream(arg);
  std::string token;
  while (std::getline(stream, token, ',')) {
    if (token.empty()) continue;
    try {
      std::size_t used = 0;
      const unsigned long value = std::stoul(token, &used);
      if (used != token.size()) throw std::invalid_argument(token);
      ids.push_back(static_cast<std::uint32_t>(value));
    } catch (...) {
      fail("invalid scan id '", token, "' in id list");
    }
  }
  return ids;
}

} // namespace seqstrat
