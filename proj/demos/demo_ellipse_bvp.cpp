#include <gpdm/gpdm.hpp>
int main() { return 0; }
