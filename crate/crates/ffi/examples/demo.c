#include <math.h>
#include <stdio.h>

#include "multibell.h"

static int check(MbStatus status) {
  if (status != MB_STATUS_OK) {
    fprintf(stderr, "status %d: %s\n", (int)status, mb_last_error_message());
    return 1;
  }
  return 0;
}

int main(void) {
  double ones[3] = {1.0, 1.0, 1.0};
  double bell = 0.0;
  if (check(mb_complete_bell(ones, 3, &bell))) return 1;

  MbExpr *f = NULL;
  if (check(mb_expr_parse("x1*x2", 2, &f))) return 1;
  double point[2] = {1.0, 1.0};
  uint32_t orders[2] = {1, 1};
  MbSession *session = NULL;
  if (check(mb_session_new(f, point, 2, &session))) return 1;
  double value = 0.0;
  if (check(mb_session_exp_derivative(session, orders, 2, &value))) return 1;
  uint64_t calls = 0;
  if (check(mb_session_provider_calls(session, &calls))) return 1;

  MbExpr *bad = NULL;
  MbStatus parse_status = mb_expr_parse("x1 +", 1, &bad);

  printf("bell %.17g\nvalue %.17g\ncalls %llu\nparse %d %s\n", bell, value,
         (unsigned long long)calls, (int)parse_status, mb_last_error_message());
  mb_session_free(session);
  mb_expr_free(f);
  return fabs(value - 2.0 * exp(1.0)) < 1e-14 && bell == 5.0 && bad == NULL ? 0 : 1;
}
