#include "tclf/tracks.hpp"

#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>

#include "tclf/error.hpp"

namespace tclf {

namespace {

constexpr std::array<const char*, 7> kTrackColumns = {
    "sid", "name", "basin", "iso_time", "lat", "lon", "dist2land_km"};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view text, T& out) {
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

}  // namespace

Timestamp parse_iso_time(std::string_view text) {
  text = trim(text);
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  const bool shape_ok = text.size() == 19 && text[4] == '-' && text[7] == '-' &&
                        (text[10] == ' ' || text[10] == 'T') && text[13] == ':' &&
                        text[16] == ':';
  if (!shape_ok || !parse_number(text.substr(0, 4), y) || !parse_number(text.substr(5, 2), mo) ||
      !parse_number(text.substr(8, 2), d) || !parse_number(text.substr(11, 2), h) ||
      !parse_number(text.substr(14, 2), mi) || !parse_number(text.substr(17, 2), s)) {
    throw FormatError("invalid timestamp '" + std::string(text) + "'");
  }
  using namespace std::chrono;
  const year_month_day date{year{y}, month{static_cast<unsigned>(mo)},
                            day{static_cast<unsigned>(d)}};
  if (!date.ok() || h > 23 || mi > 59 || s > 59) {
    throw FormatError("invalid timestamp '" + std::string(text) + "'");
  }
  const auto days = sys_days(date).time_since_epoch().count();
  return static_cast<Timestamp>(days) * 86400 + h * 3600 + mi * 60 + s;
}

std::string format_iso_time(Timestamp t) {
  using namespace std::chrono;
  const Timestamp day_count = (t >= 0 ? t : t - 86399) / 86400;
  const Timestamp secs = t - day_count * 86400;
  const year_month_day date{sys_days{days{day_count}}};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u %02d:%02d:%02d", static_cast<int>(date.year()),
                static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()),
                static_cast<int>(secs / 3600), static_cast<int>(secs / 60 % 60),
                static_cast<int>(secs % 60));
  return buf;
}

const char* to_string(Basin basin) {
  switch (basin) {
    case Basin::NI: return "NI";
    case Basin::SI: return "SI";
    case Basin::EP: return "EP";
    case Basin::SP: return "SP";
    case Basin::WP: return "WP";
    case Basin::NA: return "NA";
  }
  return "?";
}

Basin basin_from_string(std::string_view code) {
  for (Basin b : {Basin::NI, Basin::SI, Basin::EP, Basin::SP, Basin::WP, Basin::NA}) {
    if (code == to_string(b)) return b;
  }
  throw FormatError("unknown basin code '" + std::string(code) + "'");
}

std::vector<Track> parse_tracks(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::array<std::size_t, kTrackColumns.size()> col{};
  std::size_t n_fields = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) break;
  }
  if (trim(line).empty()) throw FormatError("track file: missing header");
  {
    const auto header = split_commas(line);
    n_fields = header.size();
    for (std::size_t c = 0; c < kTrackColumns.size(); ++c) {
      std::size_t found = header.size();
      for (std::size_t h = 0; h < header.size(); ++h) {
        if (header[h] == kTrackColumns[c]) found = h;
      }
      if (found == header.size()) {
        throw FormatError(std::string("track file: header lacks column '") + kTrackColumns[c] +
                          "'");
      }
      col[c] = found;
    }
  }

  std::vector<Track> tracks;
  std::set<std::string> finished;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto where = "track file line " + std::to_string(line_no);
    const auto fields = split_commas(line);
    if (fields.size() != n_fields) {
      throw FormatError(where + ": expected " + std::to_string(n_fields) + " fields, got " +
                        std::to_string(fields.size()));
    }
    const std::string sid(fields[col[0]]);
    if (sid.empty()) throw FormatError(where + ": empty sid");
    Basin basin;
    Timestamp time;
    try {
      basin = basin_from_string(fields[col[2]]);
      time = parse_iso_time(fields[col[3]]);
    } catch (const FormatError& e) {
      throw FormatError(where + ": " + e.what());
    }
    double lat = 0, lon = 0, dist = 0;
    if (!parse_number(fields[col[4]], lat) || !parse_number(fields[col[5]], lon) ||
        !parse_number(fields[col[6]], dist) || !std::isfinite(dist) || dist < 0.0) {
      throw FormatError(where + ": lat, lon and dist2land_km must be numeric (dist >= 0)");
    }
    GeoPoint position;
    try {
      position = GeoPoint(lat, lon);
    } catch (const FormatError& e) {
      throw FormatError(where + ": " + e.what());
    }
    if (time % kFixInterval != 0) {
      throw FormatError("track " + sid + ": timestamp " + format_iso_time(time) +
                        " is off the 3-hour lattice (line " + std::to_string(line_no) + ")");
    }

    if (tracks.empty() || tracks.back().sid != sid) {
      if (!tracks.empty()) finished.insert(tracks.back().sid);
      if (finished.count(sid)) {
        throw FormatError(where + ": rows for sid " + sid + " are not contiguous");
      }
      tracks.push_back(Track{sid, std::string(fields[col[1]]), basin, {}});
    }
    Track& track = tracks.back();
    if (track.basin != basin) {
      throw FormatError(where + ": basin changes within sid " + sid);
    }
    if (!track.points.empty()) {
      const Timestamp prev = track.points.back().time;
      if (time <= prev) {
        throw FormatError("track " + sid + ": non-monotone timestamp " + format_iso_time(time) +
                          " after " + format_iso_time(prev) + " (line " +
                          std::to_string(line_no) + ")");
      }
      if (time - prev != kFixInterval) {
        throw FormatError("track " + sid + ": gap of " +
                          std::to_string((time - prev) / 3600) + "h between " +
                          format_iso_time(prev) + " and " + format_iso_time(time) + " (line " +
                          std::to_string(line_no) + ")");
      }
    }
    track.points.push_back(TrackPoint{time, position, dist});
  }
  return tracks;
}

std::vector<Track> parse_tracks_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot open track file " + path.string());
  return parse_tracks(in);
}

void write_tracks(std::ostream& out, std::span<const Track> tracks) {
  out << "sid,name,basin,iso_time,lat,lon,dist2land_km\n";
  char buf[128];
  for (const Track& t : tracks) {
    for (const TrackPoint& p : t.points) {
      std::snprintf(buf, sizeof buf, ",%.6f,%.6f,%.3f\n", p.position.lat(), p.position.lon(),
                    p.dist_to_land_km);
      out << t.sid << ',' << t.name << ',' << to_string(t.basin) << ','
          << format_iso_time(p.time) << buf;
    }
  }
}

std::vector<CycloneUnit> extract_cyclone_units(const Track& track) {
  std::vector<CycloneUnit> units;
  std::size_t i = 0;
  int ordinal = 0;
  const auto& pts = track.points;
  while (i < pts.size()) {
    if (pts[i].over_land()) {
      ++i;
      continue;
    }
    std::size_t end = i;
    while (end < pts.size() && !pts[end].over_land()) ++end;
    if (end < pts.size()) {
      CycloneUnit unit;
      unit.sid = track.sid;
      unit.basin = track.basin;
      unit.ocean_points.assign(pts.begin() + static_cast<std::ptrdiff_t>(i),
                               pts.begin() + static_cast<std::ptrdiff_t>(end));
      unit.landfall = pts[end];
      if (unit.duration() >= kMinUnitDuration) {
        unit.id = track.sid + "_" + std::to_string(++ordinal);
        units.push_back(std::move(unit));
      }
    }
    i = end;
  }
  return units;
}

std::vector<CycloneUnit> extract_cyclone_units(std::span<const Track> tracks) {
  std::vector<CycloneUnit> units;
  for (const Track& t : tracks) {
    auto part = extract_cyclone_units(t);
    units.insert(units.end(), std::make_move_iterator(part.begin()),
                 std::make_move_iterator(part.end()));
  }
  return units;
}

}  // namespace tclf
