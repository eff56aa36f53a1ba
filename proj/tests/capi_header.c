/* Compiles the public header as C and makes a few calls. */
#include <stdio.h>
#include <string.h>

#include "lumen/lumen.h"

int main(void) {
  double v = 0.0;
  lumen_dml_options o;
  lumen_service_options so;
  if (lumen_influence(100.0, 0.0, 1500.0, &v) != LUMEN_OK) return 1;
  if (v <= 0.0) return 1;
  if (lumen_influence(-1.0, 0.0, 1500.0, &v) != LUMEN_E_DOMAIN) return 1;
  if (strlen(lumen_last_error()) == 0) return 1;
  lumen_dml_options_init(&o);
  lumen_service_options_init(&so);
  if (o.folds != 3 || so.session_ttl_seconds != 1800) return 1;
  printf("lumen %s\n", lumen_version());
  return 0;
}
