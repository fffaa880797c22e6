#ifndef REPCL_H
#define REPCL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum RepclStatus {
  REPCL_STATUS_OK = 0,
  REPCL_STATUS_NULL_POINTER = 1,
  REPCL_STATUS_INVALID_ARGUMENT = 2,
  REPCL_STATUS_CLOCK = 3,
  REPCL_STATUS_CODEC = 4,
  REPCL_STATUS_TRACE = 5,
  REPCL_STATUS_NOT_IN_FRONTLINE = 6,
  /**
   * The output buffer is too short; the required length was written.
   */
  REPCL_STATUS_BUFFER_TOO_SMALL = 7,
  /**
   * The session has no events left to replay.
   */
  REPCL_STATUS_SESSION_COMPLETE = 8,
  REPCL_STATUS_PANIC = 99,
} RepclStatus;

typedef enum RepclOrdering {
  REPCL_ORDERING_BEFORE = 0,
  REPCL_ORDERING_AFTER = 1,
  REPCL_ORDERING_CONCURRENT = 2,
} RepclOrdering;

/**
 * Clock parameters: process count, skew bound and epoch length.
 */
typedef struct RepclConfig RepclConfig;

typedef struct RepclSession RepclSession;

typedef struct RepclTimestamp RepclTimestamp;

/**
 * A loaded trace. Sessions keep their trace alive, so the handle may be
 * freed while sessions created from it are still in use.
 */
typedef struct RepclTrace RepclTrace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or an empty string. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *repcl_last_error_message(void);

/**
 * Skew bound `epsilon_us` and epoch length `interval_us` are in
 * microseconds; the interval must divide the bound.
 */
enum RepclStatus repcl_config_new(size_t n,
                                  uint64_t epsilon_us,
                                  uint64_t interval_us,
                                  struct RepclConfig **out);

void repcl_config_free(struct RepclConfig *cfg);

/**
 * The skew bound in epochs, or 0 for a null handle.
 */
uint64_t repcl_config_epsilon(const struct RepclConfig *cfg);

/**
 * Epoch of physical time `pt_us`.
 */
enum RepclStatus repcl_derive_epoch(const struct RepclConfig *cfg, uint64_t pt_us, uint64_t *out);

/**
 * Timestamp of a process before its first event.
 */
enum RepclStatus repcl_timestamp_initial(const struct RepclConfig *cfg,
                                         size_t owner,
                                         struct RepclTimestamp **out);

void repcl_timestamp_free(struct RepclTimestamp *ts);

enum RepclStatus repcl_timestamp_clone(const struct RepclTimestamp *ts,
                                       struct RepclTimestamp **out);

/**
 * New timestamp for a local or send event at local epoch `epoch_now`.
 */
enum RepclStatus repcl_timestamp_advance(const struct RepclConfig *cfg,
                                         const struct RepclTimestamp *ts,
                                         uint64_t epoch_now,
                                         struct RepclTimestamp **out);

/**
 * New timestamp for receiving a message stamped `msg` on the process whose
 * latest timestamp is `local`, at local epoch `epoch_now`.
 */
enum RepclStatus repcl_timestamp_receive(const struct RepclConfig *cfg,
                                         const struct RepclTimestamp *local,
                                         const struct RepclTimestamp *msg,
                                         uint64_t epoch_now,
                                         struct RepclTimestamp **out);

enum RepclStatus repcl_timestamp_compare(const struct RepclConfig *cfg,
                                         const struct RepclTimestamp *e,
                                         const struct RepclTimestamp *f,
                                         enum RepclOrdering *out);

/**
 * Largest epoch the timestamp knows of, or 0 for a null handle.
 */
uint64_t repcl_timestamp_mx(const struct RepclTimestamp *ts);

size_t repcl_timestamp_owner(const struct RepclTimestamp *ts);

/**
 * Offset of process `proc`; epsilon when no entry is stored.
 */
enum RepclStatus repcl_timestamp_offset(const struct RepclConfig *cfg,
                                        const struct RepclTimestamp *ts,
                                        size_t proc_,
                                        uint64_t *out);

uint64_t repcl_timestamp_counter(const struct RepclTimestamp *ts, size_t proc_);

/**
 * Encodes into `buf` (capacity `cap` words). The word count is written to
 * `out_len` even when the buffer is too small.
 */
enum RepclStatus repcl_timestamp_encode(const struct RepclTimestamp *ts,
                                        size_t n,
                                        uint32_t offset_bits,
                                        uint32_t counter_bits,
                                        uint64_t *buf,
                                        size_t cap,
                                        size_t *out_len);

/**
 * Decodes `len` words produced by [`repcl_timestamp_encode`] with the same
 * layout. The owner is not part of the encoding and must be supplied.
 */
enum RepclStatus repcl_timestamp_decode(const uint64_t *words,
                                        size_t len,
                                        size_t n,
                                        uint32_t offset_bits,
                                        uint32_t counter_bits,
                                        size_t owner,
                                        struct RepclTimestamp **out);

/**
 * Loads a JSON-lines trace file.
 */
enum RepclStatus repcl_trace_load(const char *path, struct RepclTrace **out);

void repcl_trace_free(struct RepclTrace *trace);

/**
 * Number of events, or 0 for a null handle.
 */
size_t repcl_trace_len(const struct RepclTrace *trace);

/**
 * Copy of the timestamp of the event at `index` in trace order.
 */
enum RepclStatus repcl_trace_timestamp(const struct RepclTrace *trace,
                                       size_t index,
                                       struct RepclTimestamp **out);

enum RepclStatus repcl_session_new(const struct RepclTrace *trace,
                                   uint64_t seed,
                                   struct RepclSession **out);

void repcl_session_free(struct RepclSession *session);

/**
 * Replays `event_id`, which must be in the current frontline.
 */
enum RepclStatus repcl_session_step(struct RepclSession *session, uint64_t event_id);

/**
 * Replays a frontline event chosen by the session's generator and writes
 * its id, or returns `SessionComplete`.
 */
enum RepclStatus repcl_session_auto_step(struct RepclSession *session, uint64_t *out_event_id);

/**
 * Restores the initial frontline and reseeds the generator.
 */
enum RepclStatus repcl_session_reset(struct RepclSession *session);

size_t repcl_session_remaining(const struct RepclSession *session);

/**
 * Event ids replayable next, ascending by trace position.
 */
enum RepclStatus repcl_session_frontline(const struct RepclSession *session,
                                         uint64_t *buf,
                                         size_t cap,
                                         size_t *out_len);

/**
 * Event ids replayed so far, in order.
 */
enum RepclStatus repcl_session_prefix(const struct RepclSession *session,
                                      uint64_t *buf,
                                      size_t cap,
                                      size_t *out_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* REPCL_H */
