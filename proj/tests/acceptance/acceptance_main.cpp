// placeholder; populated once the library settles
int main() { return 0; }
