#ifndef QUANTY_HALL_H
#define QUANTY_HALL_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum QhStatus {
  QH_STATUS_OK = 0,
  QH_STATUS_NULL_POINTER = 1,
  QH_STATUS_INVALID_ARGUMENT = 2,
  QH_STATUS_PROTOCOL_ERROR = 3,
  QH_STATUS_IO_ERROR = 4,
  QH_STATUS_BUFFER_TOO_SMALL = 5,
  QH_STATUS_NOT_RUN = 6,
  QH_STATUS_PANIC = 7,
} QhStatus;

typedef enum QhProtocol {
  QH_PROTOCOL_QUTRIT = 0,
  QH_PROTOCOL_QUBIT = 1,
} QhProtocol;

typedef enum QhAttack {
  QH_ATTACK_NONE = 0,
  QH_ATTACK_IR_FIRST_LEG = 1,
  QH_ATTACK_IR_SECOND_LEG = 2,
  QH_ATTACK_DOUBLE_IR = 3,
  // Qubit protocol: `A0` on the first leg, `A1` on the second.
  QH_ATTACK_SINGLE_QUBIT_A0A1 = 4,
  // Qubit protocol: `A1` on the first leg, `A0` on the second.
  QH_ATTACK_SINGLE_QUBIT_A1A0 = 5,
} QhAttack;

typedef enum QhVerdict {
  QH_VERDICT_SAFE = 0,
  QH_VERDICT_COMPROMISED = 1,
} QhVerdict;

// Opaque session handle.
typedef struct QhSession QhSession;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copy the last error message of this thread into `buf` (NUL-terminated,
// truncated to fit). Returns the full message length without the NUL.
//
// # Safety
// `buf` must be NULL or point to `len` writable bytes.
size_t qh_last_error_message(char *buf, size_t len);

// `|Bell value|` of residual `residual` (0, 1 or 2) when Eve runs the
// two-leg attack with probability `p`.
//
// # Safety
// `out` must be NULL or a valid pointer to a `double`.
enum QhStatus qh_bell_value(enum QhProtocol proto, uint32_t residual, double p, double *out);

// Attack probability at which the Bell value reaches the classical bound.
//
// # Safety
// `out` must be NULL or a valid pointer to a `double`.
enum QhStatus qh_threshold(enum QhProtocol proto, double *out);

// Create an unattacked session in exact Bell mode.
//
// # Safety
// `out` must be NULL or a valid pointer; on success it receives a handle that
// must be released with [`qh_session_free`].
enum QhStatus qh_session_new(enum QhProtocol proto,
                             size_t rounds,
                             double chi,
                             uint64_t seed,
                             struct QhSession **out);

// Set the eavesdropper and channel noise; discards any previous run.
//
// # Safety
// `session` must be NULL or a live handle from [`qh_session_new`].
enum QhStatus qh_session_set_attack(struct QhSession *session,
                                    enum QhAttack attack,
                                    double p,
                                    double noise);

// # Safety
// `session` must be NULL or a live handle from [`qh_session_new`].
enum QhStatus qh_session_run(struct QhSession *session);

// Number of key bits, available after [`qh_session_run`].
//
// # Safety
// `session` must be NULL or a live handle; `out` NULL or a valid pointer.
enum QhStatus qh_session_key_len(const struct QhSession *session, size_t *out);

// Copy both raw keys, one bit per byte, into buffers of `len` bytes.
//
// # Safety
// `session` must be NULL or a live handle; `alice` and `bob` NULL or
// pointers to `len` writable bytes.
enum QhStatus qh_session_keys(const struct QhSession *session,
                              uint8_t *alice,
                              uint8_t *bob,
                              size_t len);

// # Safety
// `session` must be NULL or a live handle; `out` NULL or a valid pointer.
enum QhStatus qh_session_mean_bell(const struct QhSession *session, double *out);

// Fraction of rounds whose key bit Eve learned.
//
// # Safety
// `session` must be NULL or a live handle; `out` NULL or a valid pointer.
enum QhStatus qh_session_eve_known_fraction(const struct QhSession *session, double *out);

// # Safety
// `session` must be NULL or a live handle; `out` NULL or a valid pointer.
enum QhStatus qh_session_verdict(const struct QhSession *session, enum QhVerdict *out);

// Write the transcript as JSON lines to the UTF-8 path `path`.
//
// # Safety
// `session` must be NULL or a live handle; `path` NULL or a NUL-terminated
// string.
enum QhStatus qh_session_write_transcript(const struct QhSession *session, const char *path);

// Release a handle; NULL is ignored.
//
// # Safety
// `session` must be NULL or a handle from [`qh_session_new`] not yet freed.
void qh_session_free(struct QhSession *session);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QUANTY_HALL_H */
