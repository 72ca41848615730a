#include "prising/prising.hpp"
int main(){return 0;}
