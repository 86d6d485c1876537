fn main() {
    std::process::exit(chartgen::cli_main());
}
