#ifndef COPR_LOGS_HPP_
#define COPR_LOGS_HPP_

#include <cstdint>
#include <string>
#include <vector>

namespace copr {

/*! One scored candidate: ecpm = 1000 * bid * pctr, the auction sort key. */
struct ScoredAd {
  std::uint32_t ad_id = 0;
  double pctr = 0.0;  // score used for ranking (adjusted score for relaxation models)
  double bid = 0.0;
  double ecpm = 0.0;
};

/*! ECPM-descending list from one model pass; ties broken by ascending ad_id. */
struct RankedList {
  std::uint32_t request_id = 0;
  std::vector<ScoredAd> entries;
};

struct Impression {
  std::uint32_t ad_id = 0;
  std::uint8_t y = 0;  // click (1) / non-click (0)
};

/*! Displayed ads with click feedback, in display order. */
struct ImpressionLog {
  std::uint32_t request_id = 0;
  std::vector<Impression> entries;
};

/*! Join table: request id -> (user, context). */
struct RequestInfo {
  std::uint32_t request_id = 0;
  std::uint32_t user = 0;
  std::uint32_t context = 0;
};

/*!
 * Line-delimited serialization with fixed field order and 17-significant-
 * digit decimals, so replays are bit-exact.
 *
 *   requests.csv    request_id,user_id,context_id
 *   ranking.csv     request_id,position,ad_id,pctr,bid,bid_pre
 *   impressions.csv request_id,ad_id,y
 *
 * bid_pre is the pre-ranking-phase bid; the simulator uses a single bid per
 * ad, so it currently mirrors bid.
 */
void write_requests(const std::string& path, const std::vector<RequestInfo>& requests);
std::vector<RequestInfo> read_requests(const std::string& path);

void write_ranking_logs(const std::string& path, const std::vector<RankedList>& logs);
std::vector<RankedList> read_ranking_logs(const std::string& path);

void write_impression_logs(const std::string& path, const std::vector<ImpressionLog>& logs);
std::vector<ImpressionLog> read_impression_logs(const std::string& path);

}  // namespace copr

#endif  // COPR_LOGS_HPP_
