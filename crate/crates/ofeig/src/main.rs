fn main() {
    std::process::exit(ofeig::cli::main_entry());
}
