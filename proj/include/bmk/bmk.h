/* C interface to the toolkit. Strings returned by the library are owned by
 * the handle (or the calling thread for bmk_last_error) and stay valid until
 * the handle is freed or the next call that replaces them. */
#ifndef BMK_BMK_H
#define BMK_BMK_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define BMK_API __attribute__((visibility("default")))
#else
#define BMK_API
#endif

typedef struct bmk_report bmk_report;

typedef enum bmk_status {
  BMK_OK = 0,
  BMK_CHECK_FAILED = 1, /* ran to completion, at least one check failed */
  BMK_PARSE_ERROR = 2,
  BMK_NUMERIC_ERROR = 3,
  BMK_INVALID_ARGUMENT = 4,
  BMK_DOMAIN_ERROR = 5,
  BMK_RESOURCE_ERROR = 6,
  BMK_CONSTRUCTION_ERROR = 7,
  BMK_INTERNAL_ERROR = 8
} bmk_status;

BMK_API const char* bmk_version(void);

/* Runs a subcommand with a JSON config object. On success (BMK_OK or
 * BMK_CHECK_FAILED) *out receives a report handle; otherwise *out is NULL and
 * bmk_last_error describes the failure. */
BMK_API bmk_status bmk_run(const char* subcommand, const char* config_json, bmk_report** out);

/* Runs one acceptance criterion (1..bmk_criterion_count()) under the
 * "quick" or "full" profile. */
BMK_API bmk_status bmk_criterion(int id, const char* profile, int workers, uint64_t seed, bmk_report** out);
BMK_API int bmk_criterion_count(void);

BMK_API int bmk_report_pass(const bmk_report* r);
BMK_API const char* bmk_report_json(const bmk_report* r);
/* "json", "csv" or "plot-data"; NULL on an unknown format. */
BMK_API const char* bmk_report_render(bmk_report* r, const char* format);
BMK_API void bmk_report_free(bmk_report* r);

/* JSON record {"status", "kind", "message"} of the last failure on this
 * thread, or an empty string. */
BMK_API const char* bmk_last_error(void);

/* Writes content to path through a temporary file and a rename. */
BMK_API bmk_status bmk_write_file(const char* path, const char* content);

#ifdef __cplusplus
}
#endif

#endif
