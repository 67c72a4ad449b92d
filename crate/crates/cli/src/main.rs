fn main() -> std::process::ExitCode {
    noma_meta::cli_main()
}
