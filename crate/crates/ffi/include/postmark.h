#ifndef POSTMARK_H
#define POSTMARK_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Failing audit step, `PM_AUDIT_STEP_NONE` when the audit passes.
typedef enum {
  PM_AUDIT_STEP_NONE = 0,
  PM_AUDIT_STEP_STRUCTURE,
  PM_AUDIT_STEP_SETUP,
  PM_AUDIT_STEP_FIRST_MIX,
  PM_AUDIT_STEP_FIRST_DECRYPT,
  PM_AUDIT_STEP_REJECTED_DECRYPT,
  PM_AUDIT_STEP_PEPS,
  PM_AUDIT_STEP_FINAL_MIX,
  PM_AUDIT_STEP_FINAL_DECRYPT,
  PM_AUDIT_STEP_REGISTERED_UNIQUE,
  PM_AUDIT_STEP_COMMIT_UNIQUE,
  PM_AUDIT_STEP_ACCEPTED_FACTS,
} PmAuditStep;

typedef enum {
  PM_STATUS_OK = 0,
  PM_STATUS_NULL_ARGUMENT = 1,
  PM_STATUS_INVALID_UTF8 = 2,
  PM_STATUS_IO = 3,
  // The board file is malformed or its hash chain is broken.
  PM_STATUS_INTEGRITY = 4,
  // The board parsed but a check failed; see the out parameter.
  PM_STATUS_VERIFY_FAILED = 5,
  PM_STATUS_UNSUPPORTED_GROUP = 6,
  PM_STATUS_INVALID_ARGUMENT = 7,
  PM_STATUS_PANIC = 8,
} PmStatus;

typedef enum {
  PM_VOTER_VERDICT_PASS = 0,
  PM_VOTER_VERDICT_PAPER_MISMATCH = 1,
  PM_VOTER_VERDICT_NOT_ACCEPTED = 2,
  PM_VOTER_VERDICT_NOT_FINALIZED = 3,
} PmVoterVerdict;

// A loaded bulletin board.
typedef struct PmBoard PmBoard;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or NULL. Valid until the
// next call into this library on the same thread.
const char *pm_last_error(void);

// # Safety
// `s` is NULL or a string returned by this library, not yet freed.
void pm_string_free(char *s);

// Library version, static storage.
const char *pm_version(void);

// Load and chain-check a board file.
//
// # Safety
// `path` is a NUL-terminated string; `out` points to writable storage.
PmStatus pm_board_load(const char *path, PmBoard **out);

// Parse a board from `len` bytes of text.
//
// # Safety
// `text` points to `len` readable bytes; `out` points to writable storage.
PmStatus pm_board_parse(const uint8_t *text, uintptr_t len, PmBoard **out);

// # Safety
// `board` is NULL or a handle from this library, not yet freed.
void pm_board_free(PmBoard *board);

// Number of records, 0 for NULL.
//
// # Safety
// `board` is NULL or a live handle.
uintptr_t pm_board_len(const PmBoard *board);

// 1 if the board carries its final seal.
//
// # Safety
// `board` is NULL or a live handle.
int pm_board_is_finalized(const PmBoard *board);

// Chain head as 64 hex characters; free with [`pm_string_free`].
//
// # Safety
// `board` is NULL or a live handle.
char *pm_board_head_hex(const PmBoard *board);

// Re-run every public check. Returns `PM_STATUS_OK` with step NONE on pass,
// `PM_STATUS_VERIFY_FAILED` with the first failing step otherwise.
//
// # Safety
// `board` is a live handle; `step` is NULL or writable.
PmStatus pm_audit(const PmBoard *board, PmAuditStep *step);

// Detected discrepancies between registered/received and tallied ids.
//
// # Safety
// `board` is a live handle; `out` is writable.
PmStatus pm_epsilon(const PmBoard *board, uint64_t *out);

// Index of a selection such as `"Alice>Bob>Eve"` in the board's list.
//
// # Safety
// `board` is a live handle; `text` is NUL-terminated; `out` is writable.
PmStatus pm_selection_index(const PmBoard *board, const char *text, uint64_t *out);

// The voter's check: printed papers against intent, then acceptance on the
// sealed board.
//
// # Safety
// `board` is a live handle; strings are NUL-terminated; `out` is writable.
PmStatus pm_voter_verify(const PmBoard *board,
                         const char *voter_id,
                         uint64_t intended,
                         uint64_t printed_vote,
                         const char *printed_id,
                         PmVoterVerdict *out);

// Decide whether the paper outcome (TOML `[counts]` table) stands under
// policy `d`. `accepted` gets 1 for the outcome, 0 for bottom. `report`, if
// not NULL, receives the full report; free it with [`pm_string_free`].
//
// # Safety
// `board` is a live handle; `paper_toml` is NUL-terminated; `accepted` is
// writable; `report` is NULL or writable.
PmStatus pm_result(const PmBoard *board,
                   const char *paper_toml,
                   uint64_t d,
                   int *accepted,
                   char **report);

// Run the command line with `argc` arguments (program name first). Output
// goes to stdout; the return value is the command's exit code.
//
// # Safety
// `argv` holds `argc` NUL-terminated strings.
int pm_cli_run(int argc, const char *const *argv);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* POSTMARK_H */
