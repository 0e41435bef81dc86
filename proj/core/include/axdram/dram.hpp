#pragma once

#include <compare>
#include <cstdint>
#include <deque>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

namespace axdram {

/// Counts of every level of the DRAM hierarchy, outermost first.
struct DramGeometry {
    std::uint32_t n_ch = 1;   ///< channels per module
    std::uint32_t n_ra = 1;   ///< ranks per channel
    std::uint32_t n_cp = 1;   ///< chips per rank
    std::uint32_t n_ba = 8;   ///< banks per chip
    std::uint32_t n_su = 32;  ///< subarrays per bank
    std::uint32_t n_ro = 512; ///< rows per subarray
    std::uint32_t n_co = 1024;///< columns (words) per row
    std::uint32_t word_bits = 32;

    /// Throws ParameterError when any count is zero.
    void validate() const;

    std::uint64_t capacity_words() const noexcept;
    std::uint64_t capacity_bits() const noexcept { return capacity_words() * word_bits; }
    std::uint64_t bank_count() const noexcept;
    std::uint64_t subarray_count() const noexcept { return bank_count() * n_su; }
    std::uint64_t words_per_bank() const noexcept;
    std::uint64_t bits_per_subarray() const noexcept;

    bool operator==(const DramGeometry&) const = default;
};

struct DramAddress {
    std::uint32_t ch = 0;
    std::uint32_t ra = 0;
    std::uint32_t cp = 0;
    std::uint32_t ba = 0;
    std::uint32_t su = 0;
    std::uint32_t ro = 0;
    std::uint32_t co = 0;

    auto operator<=>(const DramAddress&) const = default;
};

bool is_valid(const DramAddress& addr, const DramGeometry& geom) noexcept;

/// Throws AddressError naming the first offending level.
void check_address(const DramAddress& addr, const DramGeometry& geom);

// Linear word order, fastest first: column, bank, subarray, row, chip, rank,
// channel. This is the loop order of the safe-subarray mapping, so a plan
// over an all-safe device is the identity in linear space.
std::uint64_t linearize(const DramAddress& addr, const DramGeometry& geom);
DramAddress delinearize(std::uint64_t word_index, const DramGeometry& geom);

/// Flat index of the (ch, ra, cp, ba) bank holding `addr`.
std::uint64_t bank_index(const DramAddress& addr, const DramGeometry& geom) noexcept;

/// Flat index of the (ch, ra, cp, ba, su) subarray holding `addr`.
std::uint64_t subarray_index(const DramAddress& addr, const DramGeometry& geom) noexcept;

enum class AccessCondition : std::uint8_t { Hit, Miss, Conflict };
enum class Command : std::uint8_t { ACT, RD, WR, PRE };
enum class AccessKind : std::uint8_t { Read, Write };

std::string_view to_string(AccessCondition c) noexcept;
std::string_view to_string(Command c) noexcept;
std::optional<AccessCondition> parse_condition(std::string_view s) noexcept;
std::optional<Command> parse_command(std::string_view s) noexcept;

struct OpenRow {
    std::uint32_t su = 0;
    std::uint32_t ro = 0;
    bool operator==(const OpenRow&) const = default;
};

/// One row buffer per bank; subarrays share their bank's buffer.
class RowBufferState {
  public:
    explicit RowBufferState(const DramGeometry& geom);

    std::optional<OpenRow> open_row(const DramAddress& addr) const;
    void open(const DramAddress& addr);
    void close(const DramAddress& addr);

    const DramGeometry& geometry() const noexcept { return geom_; }
    std::size_t open_bank_count() const noexcept;

    bool operator==(const RowBufferState&) const = default;

  private:
    DramGeometry geom_;
    std::vector<std::optional<OpenRow>> banks_;
};

AccessCondition classify_access(const RowBufferState& state, const DramAddress& addr);

/// Array timing in nanoseconds, as produced by the voltage model.
struct TimingParams {
    double t_rcd_ns = 0.0;
    double t_ras_ns = 0.0;
    double t_rp_ns = 0.0;
};

/// Interface clock of the modeled device (LPDDR3-1600 defaults).
struct DeviceClock {
    double t_ck_ns = 1.25;
    std::uint32_t cl_cycles = 12;   ///< read latency, column command to data
    std::uint32_t burst_cycles = 4; ///< data-bus occupancy of one access (BL8)
};

/// Timing on the command-clock grid.
struct CycleTiming {
    std::uint32_t rcd = 0;
    std::uint32_t ras = 0;
    std::uint32_t rp = 0;
    std::uint32_t cl = 0;
    std::uint32_t burst = 0;

    std::uint32_t column_access() const noexcept { return cl + burst; }

    /// Converts nanoseconds to cycles, rounding up.
    static CycleTiming from(const TimingParams& t, const DeviceClock& clock);
};

struct AccessOutcome {
    AccessCondition condition = AccessCondition::Miss;
    std::vector<Command> commands;
    std::uint64_t pre_data_cycles = 0; ///< PRE/ACT latency before the column command
    std::uint64_t cycles = 0;          ///< pre_data_cycles + column access
};

/// Advances `state` by one open-page access and reports what it cost in
/// isolation.
AccessOutcome issue_access(RowBufferState& state, const DramAddress& addr, AccessKind kind,
                           const CycleTiming& timing);

struct CommandRecord {
    std::uint64_t cycle = 0;
    Command command = Command::RD;
    DramAddress address;
    std::optional<AccessCondition> condition; ///< set on RD/WR only

    bool operator==(const CommandRecord&) const = default;
};

struct AccessCounts {
    std::uint64_t hits = 0;
    std::uint64_t misses = 0;
    std::uint64_t conflicts = 0;

    std::uint64_t total() const noexcept { return hits + misses + conflicts; }
    bool operator==(const AccessCounts&) const = default;
};

class AccessTrace {
  public:
    AccessTrace() = default;
    explicit AccessTrace(const DramGeometry& geom) : geom_(geom) {}

    void append(const CommandRecord& record);

    const std::vector<CommandRecord>& records() const noexcept { return records_; }
    const AccessCounts& counts() const noexcept { return counts_; }
    const DramGeometry& geometry() const noexcept { return geom_; }
    std::size_t size() const noexcept { return records_.size(); }
    bool empty() const noexcept { return records_.empty(); }

    /// Recomputes counters and checks that every non-hit column command was
    /// preceded in its bank by an ACT of its row. Throws ConsistencyError.
    void verify() const;

  private:
    DramGeometry geom_;
    std::vector<CommandRecord> records_;
    AccessCounts counts_;
};

/// Times of the commands of one scheduled request.
struct RequestSchedule {
    std::optional<std::uint64_t> pre;
    std::optional<std::uint64_t> act;
    std::uint64_t column = 0;
    std::uint64_t data_end = 0;
};

/// Online multi-bank burst scheduler.
///
/// Requests issue in order, one command slot apart. A row opening (Miss or
/// Conflict) waits for the previous access of its own bank to finish and for
/// the row opening `n_burst_banks` positions earlier to deliver its data, so
/// at most `n_burst_banks` activations overlap. PRE additionally respects
/// tRAS of the row it closes. Column accesses share one data bus, each
/// occupying `burst` cycles.
class BurstScheduler {
  public:
    BurstScheduler(const DramGeometry& geom, const CycleTiming& timing,
                   std::uint32_t n_burst_banks = 4);

    RequestSchedule schedule(AccessCondition condition, const DramAddress& addr);

    std::uint64_t total_cycles() const noexcept { return total_; }

  private:
    struct BankClock {
        std::uint64_t busy_until = 0;
        std::uint64_t row_ready = 0;
        std::optional<std::uint64_t> last_act;
    };

    DramGeometry geom_;
    CycleTiming timing_;
    std::uint32_t n_burst_;
    std::vector<BankClock> banks_;
    std::deque<std::uint64_t> openings_;
    std::optional<std::uint64_t> last_issue_;
    std::uint64_t bus_free_ = 0;
    std::uint64_t total_ = 0;
};

/// Total cycles of `trace` replayed through a fresh BurstScheduler.
std::uint64_t burst_cycles(const AccessTrace& trace, const CycleTiming& timing,
                           std::uint32_t n_burst_banks = 4);

/// Row-buffer state machine plus scheduler; records a timestamped trace.
class DramSimulator {
  public:
    DramSimulator(const DramGeometry& geom, const CycleTiming& timing,
                  std::uint32_t n_burst_banks = 4);

    AccessCondition access(const DramAddress& addr, AccessKind kind = AccessKind::Read);

    const AccessTrace& trace() const noexcept { return trace_; }
    AccessTrace take_trace() && { return std::move(trace_); }
    const RowBufferState& state() const noexcept { return state_; }
    std::uint64_t total_cycles() const noexcept { return scheduler_.total_cycles(); }

  private:
    DramGeometry geom_;
    CycleTiming timing_;
    RowBufferState state_;
    BurstScheduler scheduler_;
    AccessTrace trace_;
};

/// CSV columns: cycle,command,ch,ra,cp,ba,su,ro,co,condition
void write_trace_csv(std::ostream& os, const AccessTrace& trace);
AccessTrace read_trace_csv(std::istream& is, const DramGeometry& geom);

}  // namespace axdram
