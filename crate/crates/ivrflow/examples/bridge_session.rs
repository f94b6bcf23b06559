//! Full wire-level round trip: start the NDJSON bridge on an ephemeral
//! port, connect as a telephony client, and print both sides of the
//! exchange for one confirmed call.
//!
//! ```bash
//! cargo run --example bridge_session
//! ```

use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::sync::Arc;

use ivrflow::bridge::{self, decode_command, encode_message, BridgeCommand, BridgeMessage};
use ivrflow::engine::CallEngine;
use ivrflow::synth;

fn send(stream: &mut TcpStream, message: &BridgeMessage) {
    let frame = encode_message(message).expect("valid message");
    print!("  > {frame}");
    stream.write_all(frame.as_bytes()).expect("write frame");
}

fn read_commands(reader: &mut BufReader<TcpStream>, n: usize) -> Vec<BridgeCommand> {
    let mut commands = Vec::with_capacity(n);
    for _ in 0..n {
        let mut line = String::new();
        reader.read_line(&mut line).expect("read frame");
        print!("  < {line}");
        commands.push(decode_command(&line).expect("valid command"));
    }
    commands
}

fn main() {
    let config = Arc::new(synth::test_config(8));
    let class = config.taxonomy.classes()[0].clone();
    let engine = Arc::new(CallEngine::new(Arc::clone(&config), None));
    let server = bridge::serve("127.0.0.1:0", engine).expect("bind ephemeral port");
    println!("bridge listening on {}", server.local_addr());

    let mut stream = TcpStream::connect(server.local_addr()).expect("connect");
    let mut reader = BufReader::new(stream.try_clone().expect("clone stream"));

    println!("\n-- session start");
    send(
        &mut stream,
        &BridgeMessage::SessionStart {
            call_id: "demo-1".to_string(),
            language: "kk".to_string(),
        },
    );
    read_commands(&mut reader, 2); // play greeting, listen

    println!("\n-- caller describes the problem");
    send(
        &mut stream,
        &BridgeMessage::Utterance {
            call_id: "demo-1".to_string(),
            audio_ref: None,
            text: Some(format!(
                "менің {} {} мәселем бар",
                class.keywords[0], class.keywords[1]
            )),
        },
    );
    read_commands(&mut reader, 2); // play confirmation, listen

    println!("\n-- caller confirms");
    send(
        &mut stream,
        &BridgeMessage::Utterance {
            call_id: "demo-1".to_string(),
            audio_ref: None,
            text: Some("иә".to_string()),
        },
    );
    let commands = read_commands(&mut reader, 2); // transfer, hangup
    match &commands[0] {
        BridgeCommand::Transfer { queue_id, .. } => {
            println!(
                "\ncall routed to queue {queue_id} (class {})",
                class.class_id
            )
        }
        other => println!("\nunexpected command: {other:?}"),
    }

    drop(stream);
    server.shutdown();
}
