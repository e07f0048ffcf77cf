/* The public header must stay consumable from plain C. */
#include <qnet/qnet.h>

const char* capi_header_version(void) { return qnet_version(); }
