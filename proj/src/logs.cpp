#include "copr/logs.hpp"

#include <fstream>
#include <stdexcept>

#include "copr/text.hpp"

namespace copr {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  return out;
}

std::vector<std::vector<std::string>> read_csv(const std::string& path, const char* header,
                                               std::size_t n_fields) {
  const std::string text = read_file(path);
  std::vector<std::vector<std::string>> rows;
  bool first = true;
  for (const auto& line : split(text, '\n')) {
    if (trim(line).empty()) continue;
    if (first) {
      if (trim(line) != header) {
        throw std::runtime_error(path + ": unexpected header '" + line + "'");
      }
      first = false;
      continue;
    }
    auto fields = split(line, ',');
    if (fields.size() != n_fields) {
      throw std::runtime_error(path + ": expected " + std::to_string(n_fields) +
                               " fields, got " + std::to_string(fields.size()));
    }
    rows.push_back(std::move(fields));
  }
  if (first) throw std::runtime_error(path + ": missing header");
  return rows;
}

}  // namespace

void write_requests(const std::string& path, const std::vector<RequestInfo>& requests) {
  auto out = open_out(path);
  out << "request_id,user_id,context_id\n";
  for (const auto& r : requests) {
    out << r.request_id << ',' << r.user << ',' << r.context << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<RequestInfo> read_requests(const std::string& path) {
  std::vector<RequestInfo> out;
  for (const auto& f : read_csv(path, "request_id,user_id,context_id", 3)) {
    RequestInfo r;
    r.request_id = static_cast<std::uint32_t>(parse_int(f[0]));
    r.user = static_cast<std::uint32_t>(parse_int(f[1]));
    r.context = static_cast<std::uint32_t>(parse_int(f[2]));
    out.push_back(r);
  }
  return out;
}

void write_ranking_logs(const std::string& path, const std::vector<RankedList>& logs) {
  auto out = open_out(path);
  out << "request_id,position,ad_id,pctr,bid,bid_pre\n";
  for (const auto& log : logs) {
    for (std::size_t pos = 0; pos < log.entries.size(); ++pos) {
      const auto& e = log.entries[pos];
      out << log.request_id << ',' << (pos + 1) << ',' << e.ad_id << ','
          << format_double(e.pctr) << ',' << format_double(e.bid) << ','
          << format_double(e.bid) << '\n';
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<RankedList> read_ranking_logs(const std::string& path) {
  std::vector<RankedList> out;
  for (const auto& f : read_csv(path, "request_id,position,ad_id,pctr,bid,bid_pre", 6)) {
    const auto request_id = static_cast<std::uint32_t>(parse_int(f[0]));
    const auto position = static_cast<std::size_t>(parse_int(f[1]));
    if (out.empty() || out.back().request_id != request_id) {
      out.push_back(RankedList{request_id, {}});
    }
    if (position != out.back().entries.size() + 1) {
      throw std::runtime_error(path + ": positions must be contiguous per request");
    }
    ScoredAd ad;
    ad.ad_id = static_cast<std::uint32_t>(parse_int(f[2]));
    ad.pctr = parse_double(f[3]);
    ad.bid = parse_double(f[4]);
    ad.ecpm = 1000.0 * ad.bid * ad.pctr;
    out.back().entries.push_back(ad);
  }
  return out;
}

void write_impression_logs(const std::string& path, const std::vector<ImpressionLog>& logs) {
  auto out = open_out(path);
  out << "request_id,ad_id,y\n";
  for (const auto& log : logs) {
    for (const auto& e : log.entries) {
      out << log.request_id << ',' << e.ad_id << ',' << static_cast<int>(e.y) << '\n';
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<ImpressionLog> read_impression_logs(const std::string& path) {
  std::vector<ImpressionLog> out;
  for (const auto& f : read_csv(path, "request_id,ad_id,y", 3)) {
    const auto request_id = static_cast<std::uint32_t>(parse_int(f[0]));
    if (out.empty() || out.back().request_id != request_id) {
      out.push_back(ImpressionLog{request_id, {}});
    }
    Impression imp;
    imp.ad_id = static_cast<std::uint32_t>(parse_int(f[1]));
    const auto y = parse_int(f[2]);
    if (y != 0 && y != 1) throw std::runtime_error(path + ": click label must be 0 or 1");
    imp.y = static_cast<std::uint8_t>(y);
    out.back().entries.push_back(imp);
  }
  return out;
}

}  // namespace copr
